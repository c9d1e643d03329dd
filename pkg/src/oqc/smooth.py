"""Bounds on the smooth max-relative entropy of a pure state against a fixed state.

The smoothing ball around a pure state psi is {rho normalised : F(rho, psi) >= 1 - nu},
i.e. <psi|rho|psi> >= (1 - nu)^2. For a single pure state D_max^nu comes out of a
one-dimensional dual (:func:`smooth_dmax_pure`); alongside it are cheaper certified
lower bounds, a pure-candidate upper estimate, and the ensemble averages built on them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .qcore import (
    SUPPORT_EIG,
    DensityOperator,
    Ensemble,
    PureState,
    as_matrix,
    eigh_psd,
    maximally_mixed,
    random_density,
    rng_for,
)

PROJ_TOL = 1e-10


def _vec(psi) -> np.ndarray:
    v = np.asarray(psi.vector if isinstance(psi, PureState) else psi, dtype=complex).reshape(-1)
    return v / np.linalg.norm(v)


def _check_unit_interval(name: str, x: float) -> None:
    if not 0.0 < x < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {x!r}")


@dataclass(frozen=True)
class SplitProjectorPair:
    """Spectral split of a state at eigenvalue 1/k: Qminus below, Qplus at or above."""

    Qminus: np.ndarray
    Qplus: np.ndarray
    k: float

    def __post_init__(self):
        qm, qp = self.Qminus, self.Qplus
        d = qm.shape[0]
        if np.max(np.abs(qm + qp - np.eye(d))) > PROJ_TOL:
            raise ValueError("Qminus + Qplus must equal the identity")
        if np.max(np.abs(qm @ qp)) > PROJ_TOL:
            raise ValueError("Qminus and Qplus must be orthogonal")
        _check_projector(qm)
        _check_projector(qp)

    @property
    def rank_plus(self) -> int:
        return int(round(np.real(np.trace(self.Qplus))))

    @property
    def rank_minus(self) -> int:
        return int(round(np.real(np.trace(self.Qminus))))


def _check_projector(q: np.ndarray) -> None:
    if np.max(np.abs(q - q.conj().T)) > PROJ_TOL or np.max(np.abs(q @ q - q)) > PROJ_TOL:
        raise ValueError("matrix is not an orthogonal projector")


def split_projectors(omega, k: float) -> SplitProjectorPair:
    if k <= 1:
        raise ValueError(f"threshold k must exceed 1, got {k!r}")
    w, v = eigh_psd(as_matrix(omega))
    low = w < 1.0 / k
    vm, vp = v[:, low], v[:, ~low]
    return SplitProjectorPair(vm @ vm.conj().T, vp @ vp.conj().T, float(k))


def _overlap_formula(qm, nu):
    """Vectorised closed form; qm may be an array of <psi|Q-|psi> values."""
    qm = np.clip(np.asarray(qm, dtype=float), 0.0, 1.0)
    qp = 1.0 - qm
    val = (np.sqrt((1.0 - nu) * qm) - np.sqrt(qp * nu)) ** 2
    return np.where(qm > nu, val, 0.0)


def smoothed_overlap_closed_form(psi, Qminus: np.ndarray, nu: float) -> float:
    """min <lam|Q-|lam> over unit lam with |<lam|psi>|^2 >= 1 - nu."""
    _check_unit_interval("nu", nu)
    q = np.asarray(Qminus, dtype=complex)
    _check_projector(q)
    x = _vec(psi)
    qm = float(np.real(np.vdot(x, q @ x)))
    return float(_overlap_formula(qm, nu))


def ball_overlap_radius(nu: float) -> float:
    """Pure-state overlap radius nu' = 1 - (1 - nu)^2 implied by fidelity >= 1 - nu."""
    return 1.0 - (1.0 - nu) ** 2


def smooth_dmax_lower_bound(psi, omega, nu: float, k: float) -> float:
    """Certified lower bound on D_max^nu(psi || omega) from the spectral split at 1/k.

    Any rho in the ball with 2^L omega >= rho has 2^L / k >= <phi|rho|phi> for unit phi
    under Qminus, and that overlap is at least the pure-state minimum at radius
    nu' = 2 nu - nu^2. Returns 0 when <psi|Q-|psi> <= 2 nu.
    """
    _check_unit_interval("nu", nu)
    pair = split_projectors(omega, k)
    x = _vec(psi)
    qm = float(np.real(np.vdot(x, pair.Qminus @ x)))
    if qm <= 2 * nu:
        return 0.0
    s = float(_overlap_formula(qm, ball_overlap_radius(nu)))
    if s <= 0.0:
        return 0.0
    return max(0.0, math.log2(k * s))


def _threshold_bounds(vectors: np.ndarray, omega, nu: float) -> np.ndarray:
    """Best lower bound over all spectral thresholds, for each row of ``vectors``.

    For threshold t equal to an eigenvalue of omega, omega^-1 >= Q_t / t where Q_t
    spans eigenvalues <= t, giving D_max^nu >= log2(S^{nu'}(psi||Q_t) / t).
    A kernel component the ball cannot avoid gives +inf.
    """
    w, v = eigh_psd(as_matrix(omega))
    c = np.abs(vectors @ v.conj()) ** 2  # (n, d), ascending eigenvalue order
    c = c / c.sum(axis=1, keepdims=True)
    cum = np.cumsum(c, axis=1)
    nup = ball_overlap_radius(nu)
    # only evaluate at the end of each group of equal eigenvalues
    ends = np.r_[np.diff(w) > 1e-14, True]
    best = np.zeros(vectors.shape[0])
    for j in np.flatnonzero(ends):
        s = _overlap_formula(cum[:, j], nup)
        if w[j] <= SUPPORT_EIG:
            val = np.where(s > 0, np.inf, 0.0)
        else:
            with np.errstate(divide="ignore"):
                val = np.where(s > 0, np.log2(np.maximum(s, 1e-300) / w[j]), 0.0)
        best = np.maximum(best, val)
    return best


def smooth_dmax_pure(psi, omega, nu: float, grid: int = 128) -> float:
    """D_max^nu(psi || omega) for pure psi, through a one-dimensional dual.

    Writing rho = omega^{1/2} X omega^{1/2}, the smallest s with rho <= s omega is
    s* = sup_{0 <= y < c} (c - y) / lambda_max(phi phi^dag - y omega), where
    phi = omega^{1/2} psi and c = (1 - nu)^2. The ratio is quasi-concave in y, so a
    grid scan plus bounded refinement finds the sup; any shortfall only lowers s*,
    keeping the result a valid lower bound. Returns max(0, log2 s*), +inf when the
    ball does not reach the support of omega.
    """
    _check_unit_interval("nu", nu)
    x = _vec(psi)
    w, v = eigh_psd(as_matrix(omega))
    coef = v.conj().T @ x
    supp = w > SUPPORT_EIG
    c = (1.0 - nu) ** 2
    if float(np.sum(np.abs(coef[supp]) ** 2)) < c - 1e-15:
        return float("inf")
    ws = w[supp]
    phi = np.sqrt(ws) * coef[supp]
    base = np.outer(phi, phi.conj())

    def ratio(ys):
        ys = np.atleast_1d(ys)
        m = base[None, :, :] - ys[:, None, None] * np.diag(ws)[None, :, :]
        mu = np.linalg.eigvalsh(m)[:, -1]
        return np.where(mu > 0, (c - ys) / np.maximum(mu, 1e-300), 0.0)

    ys = c * (1.0 - np.geomspace(1.0, 1e-12, grid))
    ys = np.r_[0.0, ys]
    r = ratio(ys)
    j = int(np.argmax(r))
    lo, hi = ys[max(0, j - 1)], ys[min(len(ys) - 1, j + 1)]
    best = float(r[j])
    if hi > lo:
        res = minimize_scalar(lambda y: -float(ratio(y)[0]), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-14 * max(1.0, hi)})
        best = max(best, -float(res.fun))
    if best <= 0.0:
        return float("inf")
    return max(0.0, math.log2(best))


def best_lower_bound(psi, omega, nu: float) -> float:
    """Lower bound on D_max^nu(psi || omega) maximised over the spectral threshold."""
    _check_unit_interval("nu", nu)
    return float(_threshold_bounds(_vec(psi)[None, :], omega, nu)[0])


def smooth_dmax_upper_estimate(psi, omega, nu: float, seed: int = 0,
                               n_random: int = 10_000) -> float:
    """Upper estimate of D_max^nu(psi || omega) from pure candidates inside the ball.

    Candidates: psi itself, geodesics from psi toward each eigenvector of omega, the
    constrained minimiser of <lam|omega^-1|lam> (bottom eigenvector of
    omega^-1 - mu psi psi^dag with mu tuned to make the overlap constraint tight),
    and seeded random points of the ball.
    """
    _check_unit_interval("nu", nu)
    x = _vec(psi)
    d = x.size
    w, v = eigh_psd(as_matrix(omega))
    finite = w > SUPPORT_EIG
    winv_diag = np.where(finite, 1.0 / np.maximum(w, SUPPORT_EIG), 0.0)
    c_min = 1.0 - nu  # |<lam|psi>| >= 1 - nu
    cands = [x]

    # geodesics: lam = c psi + s e_perp, s at the edge of the ball
    for j in range(d):
        e = v[:, j]
        e_perp = e - x * np.vdot(x, e)
        n = np.linalg.norm(e_perp)
        if n < 1e-14:
            continue
        e_perp /= n
        cands.append(c_min * x + math.sqrt(max(0.0, 1 - c_min ** 2)) * e_perp)

    # Lagrangian candidate in the eigenbasis of omega
    xs = v.conj().T @ x
    if finite.all():
        winv_e = np.diag(winv_diag)

        def bottom(mu):
            m = winv_e - mu * np.outer(xs, xs.conj())
            _, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
            lam = vecs[:, 0]
            return lam, abs(np.vdot(xs, lam))

        lam, ov = bottom(0.0)
        if ov >= c_min:
            cands.append(v @ lam)
        else:
            lo, hi = 0.0, 1.0
            while bottom(hi)[1] < c_min and hi < 1e18:
                hi *= 4.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if bottom(mid)[1] >= c_min:
                    hi = mid
                else:
                    lo = mid
            cands.append(v @ bottom(hi)[0])

    # random points of the ball
    rng = rng_for(seed, 4, 4)
    g = rng.standard_normal((n_random, d)) + 1j * rng.standard_normal((n_random, d))
    g -= np.outer(g @ x.conj(), x)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    t = rng.random(n_random) * (1.0 - c_min ** 2)
    rand = np.sqrt(1.0 - t)[:, None] * x[None, :] + np.sqrt(t)[:, None] * g

    lams = np.vstack([np.array(cands), rand])
    lams /= np.linalg.norm(lams, axis=1, keepdims=True)
    ok = np.abs(lams @ x.conj()) >= c_min - 1e-12
    lams = lams[ok]
    coeff = np.abs(lams @ v.conj()) ** 2
    leak = coeff[:, ~finite].sum(axis=1)
    vals = np.where(leak > 1e-9, np.inf, coeff @ winv_diag)
    best = float(np.min(vals))
    return math.log2(best) if math.isfinite(best) else float("inf")


# --- ensemble level ---------------------------------------------------------------------

def _anchor_free_projector(Qminus: np.ndarray, anchor: np.ndarray) -> np.ndarray:
    """Projector onto range(Qminus) intersected with the orthogonal complement of ``anchor``."""
    w, v = np.linalg.eigh(Qminus)
    basis = v[:, w > 0.5]
    if basis.shape[1] == 0:
        return np.zeros_like(Qminus)
    row = anchor.conj() @ basis
    if np.linalg.norm(row) < 1e-14:
        b = basis
    else:
        _, _, vh = np.linalg.svd(row[None, :])
        b = basis @ vh[1:].conj().T
    return b @ b.conj().T


@dataclass
class AverageBound:
    bound: float
    bad_fraction: float
    k: float
    nu: float
    per_state_lower_bounds: list[float]
    rank_q: int
    predicted_bad_fraction: float
    nominal_bound: float
    good_term_cap: float

    def to_json(self) -> dict:
        return {
            "bound": self.bound,
            "bad_fraction": self.bad_fraction,
            "k": self.k,
            "nu": self.nu,
            "per_state_lower_bounds": list(self.per_state_lower_bounds),
            "rank_q": self.rank_q,
            "predicted_bad_fraction": self.predicted_bad_fraction,
            "nominal_bound": self.nominal_bound,
            "good_term_cap": self.good_term_cap,
        }


def ensemble_avg_2pow_neg_dmax_bound(ens: Ensemble, omega, nu: float, delta: float,
                                     k: float | None = None) -> AverageBound:
    """Certified upper bound on E_i 2^{-D_max^nu(Psi_i || omega)} for a hard ensemble.

    States whose weight on Q (the low-eigenvalue space of omega with |0> removed) is
    below delta/2 count in full; the rest contribute 2^{-L_i} with L_i from
    :func:`smooth_dmax_lower_bound`. The bad set is counted, not estimated.
    """
    if not 0.0 < nu < delta / 8:
        raise ValueError(f"nu must lie in (0, delta/8) = (0, {delta / 8}), got {nu!r}")
    d = ens.dim.d
    k = d / 4 if k is None else float(k)
    pair = split_projectors(omega, k)
    anchor = np.zeros(d, dtype=complex)
    anchor[0] = 1.0
    q = _anchor_free_projector(pair.Qminus, anchor)
    vecs = ens.vectors()
    overlaps = np.real(np.einsum("ni,ij,nj->n", vecs.conj(), q, vecs))
    bad = overlaps < delta / 2
    lows = []
    total = 0.0
    for p, psi, is_bad in zip(ens.probs, ens.states, bad):
        if is_bad:
            lows.append(float("nan"))
            continue
        lb = smooth_dmax_lower_bound(psi, omega, nu, k)
        lows.append(lb)
        total += p * 2.0 ** (-lb)
    bad_frac = float(np.sum(ens.probs[bad]))
    return AverageBound(
        bound=float(bad_frac + total),
        bad_fraction=bad_frac,
        k=k,
        nu=nu,
        per_state_lower_bounds=lows,
        rank_q=int(round(np.real(np.trace(q)))),
        predicted_bad_fraction=96.0 / d,
        nominal_bound=64.0 / (d * delta),
        good_term_cap=40.0 / (d * delta),
    )


# --- Q* -----------------------------------------------------------------------------------

@dataclass
class QStar:
    value: float
    regime: str
    best_candidate: int
    best_label: str
    certified_floor: float
    per_candidate: list[float] = field(default_factory=list)
    per_state_method: str = "exact-dual"

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "regime": self.regime,
            "per_state_method": self.per_state_method,
            "best_candidate": self.best_candidate,
            "best_label": self.best_label,
            "certified_floor": self.certified_floor,
            "per_candidate": list(self.per_candidate),
        }


def default_candidates(ens: Ensemble, seed: int = 0, n_random: int = 200,
                       max_members: int = 64) -> list[tuple[str, DensityOperator]]:
    d = ens.dim.d
    out = [("average", ens.average()), ("maximally_mixed", maximally_mixed(d))]
    for i, s in enumerate(ens.states[:max_members]):
        out.append((f"member:{i}", s.density()))
    for j in range(n_random):
        out.append((f"random:{j}", random_density(d, rng_for(seed, 7, j))))
    return out


def certified_qstar_floor(ens: Ensemble, nu: float) -> float:
    """-log2 lambda_max(sum_x p psi psi^dag) + 2 log2(1 - nu), valid for every omega.

    From 2^D omega >= rho and <psi|rho|psi> >= (1-nu)^2: 2^{-D} <= <psi|omega|psi>/(1-nu)^2.
    """
    top = float(np.linalg.eigvalsh(ens.average().matrix)[-1])
    return -math.log2(top) + 2.0 * math.log2(1.0 - nu)


def q_star(ens: Ensemble, nu: float, omega_candidates=None, seed: int = 0,
           exact_budget: int = 20_000) -> QStar:
    """-log2 max over candidate omega of sum_x p(x) 2^{-L_x(omega)}.

    L_x is :func:`smooth_dmax_pure` when (states x candidates) fits ``exact_budget``,
    otherwise the threshold-optimised lower bound; either way each candidate sum is at
    least its true value. The maximum runs over finitely many candidates, so the result
    is a heuristic estimate of Q*; ``certified_floor`` is a true lower bound.
    """
    _check_unit_interval("nu", nu)
    if omega_candidates is None:
        omega_candidates = default_candidates(ens, seed)
    cands = [c if isinstance(c, tuple) else (f"candidate:{i}", c) for i, c in enumerate(omega_candidates)]
    if not cands:
        raise ValueError("q_star needs at least one candidate omega")
    vecs = ens.vectors()
    exact = len(ens) * len(cands) <= exact_budget
    sums = []
    for _, om in cands:
        if exact:
            lb = np.array([smooth_dmax_pure(v, om, nu) for v in vecs])
        else:
            lb = _threshold_bounds(vecs, om, nu)
        sums.append(float(np.sum(ens.probs * np.exp2(-lb))))
    j = int(np.argmax(sums))
    value = -math.log2(sums[j]) if sums[j] > 0 else float("inf")
    floor = certified_qstar_floor(ens, nu)
    # with exact per-state values the candidate value bounds Q* from above, so meeting
    # the floor pins Q* down
    pinned = exact and value - floor <= 1e-9
    return QStar(
        value=value,
        regime="certified" if pinned else "heuristic",
        best_candidate=j,
        best_label=cands[j][0],
        certified_floor=floor,
        per_candidate=sums,
        per_state_method="exact-dual" if exact else "spectral-threshold",
    )
