"""Redistribution states on R_A R' B C A, their uniform-amplitude (GHZ) companion, and
the parameter arithmetic of the redistribution lower bound.

Register order in every vector is (R_A, R', B, C, A); R = R_A R'.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qcore import (
    HilbertDim,
    PureState,
    dmax,
    entropy_of_spectrum,
    eigh_psd,
    haar_unitary,
    partial_trace,
    rng_for,
)

BASIS_MODES = ("fixed_C", "random_C")
VECTOR_CAP = 1 << 15
LABELS = ("RA", "Rp", "B", "C", "A")


@dataclass(frozen=True)
class RedistParams:
    d: int
    d_a: int = 1
    beta: float = 1.0
    basis_mode: str = "fixed_C"
    seed: int = 0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must exceed 1")
        if self.d_a < 1:
            raise ValueError("d_a must be at least 1")
        if self.beta < 1:
            raise ValueError("beta must be at least 1")
        if self.basis_mode not in BASIS_MODES:
            raise ValueError(f"basis_mode must be one of {BASIS_MODES}")
        if self.d_a ** 2 * self.d ** 3 > VECTOR_CAP:
            raise ValueError(f"state dimension d_a^2 d^3 = {self.d_a ** 2 * self.d ** 3} exceeds {VECTOR_CAP}")

    @property
    def dim(self) -> HilbertDim:
        return HilbertDim(LABELS, (self.d_a, self.d, self.d, self.d, self.d_a))

    def to_json(self) -> dict:
        return {"d": self.d, "d_a": self.d_a, "beta": self.beta, "basis_mode": self.basis_mode, "seed": self.seed}


@dataclass(frozen=True)
class RedistStatePair:
    psi: PureState
    ghz: PureState
    spectrum: np.ndarray
    params: RedistParams


def low_entropy_spectrum(d: int, beta: float) -> np.ndarray:
    """e_2 = ... = e_d = 1/(d beta), e_1 = 1 - (d - 1)/(d beta)."""
    if d < 2:
        raise ValueError("d must exceed 1")
    if beta < 1:
        raise ValueError("beta must be at least 1")
    e = np.full(d, 1.0 / (d * beta))
    e[0] = 1.0 - (d - 1) / (d * beta)
    return e


def spectrum_entropy_report(d: int, beta: float) -> dict:
    """Entropy of the spectrum against 2 log2(d)/beta.

    The bound is only asserted when log2(d)/beta >= 2; below that it can fail
    (d = 2, beta = 4 gives 0.5436 > 0.5), so it is reported but not asserted.
    """
    e = low_entropy_spectrum(d, beta)
    h = entropy_of_spectrum(e)
    bound = 2.0 * math.log2(d) / beta
    applies = math.log2(d) / beta >= 2.0
    return {"spectrum": e.tolist(), "entropy": h, "bound": bound, "bound_applies": applies,
            "holds": bool(h <= bound + 1e-12)}


def _bases(params: RedistParams):
    d = params.d
    v = [haar_unitary(d, rng_for(params.seed, 5, a)) for a in range(params.d_a)]
    if params.basis_mode == "fixed_C":
        w = [np.eye(d, dtype=complex)] * params.d_a
    else:
        w = [haar_unitary(d, rng_for(params.seed, 6, a)) for a in range(params.d_a)]
    return v, w


def _assemble(params: RedistParams, amps: np.ndarray, v, w) -> np.ndarray:
    d, da = params.d, params.d_a
    t = np.zeros((da, d, d, d, da), dtype=complex)
    for a in range(da):
        # sum_j amp_j |u_j>|v_j(a)>|w_j(a)>, u_j computational
        t[a, :, :, :, a] = np.einsum("j,uj,bj,cj->ubc", amps, np.eye(d), v[a], w[a])
    return t.reshape(-1) / math.sqrt(da)


def build_redist_pair(params: RedistParams, spectrum: np.ndarray | None = None) -> RedistStatePair:
    e = low_entropy_spectrum(params.d, params.beta) if spectrum is None else np.asarray(spectrum, float)
    if e.size != params.d or abs(e.sum() - 1.0) > 1e-12 or e.min() <= 0:
        raise ValueError("spectrum must be d positive numbers summing to 1")
    v, w = _bases(params)
    dim = params.dim
    psi = _assemble(params, np.sqrt(e), v, w)
    ghz = _assemble(params, np.full(params.d, 1.0 / math.sqrt(params.d)), v, w)
    return RedistStatePair(PureState(psi, dim), PureState(ghz, dim), e, params)


def verify_rescaling(pair: RedistStatePair, psi_r: np.ndarray | None = None) -> float:
    """|| (d_a d)^{-1/2} Psi_R^{-1/2} |Psi> - |ghz> ||, with the pseudo-inverse square
    root taken on the support of Psi_R. ``psi_r`` overrides the reduced state."""
    p = pair.params
    dim = p.dim
    if psi_r is None:
        psi_r = partial_trace(pair.psi, ["RA", "Rp"], dim).matrix
    w, u = eigh_psd(psi_r)
    supp = w > 1e-12
    inv_sqrt = (u[:, supp] / np.sqrt(w[supp])) @ u[:, supp].conj().T
    dr = p.d_a * p.d
    vec = pair.psi.vector.reshape(dr, -1)
    out = (inv_sqrt @ vec).reshape(-1) / math.sqrt(dr)
    return float(np.linalg.norm(out - pair.ghz.vector))


def perturbed_psi_r(pair: RedistStatePair, eps: float) -> np.ndarray:
    """Reduced state on R built from a spectrum shifted by eps between e_1 and e_2."""
    e = pair.spectrum.copy()
    e[0] -= eps
    e[1] += eps
    return np.kron(np.eye(pair.params.d_a) / pair.params.d_a, np.diag(e))


def _entropy_pure(psi: PureState, regs, dim: HilbertDim) -> float:
    """Entropy of a marginal of a pure state, traced on whichever side is smaller."""
    regs = list(regs)
    rest = [l for l in dim.labels if l not in regs]
    size = math.prod(dim.size(l) for l in regs)
    other = math.prod(dim.size(l) for l in rest) if rest else 1
    side = regs if size <= other else rest
    if not side:
        return 0.0
    w, _ = eigh_psd(partial_trace(psi, side, dim).matrix)
    return entropy_of_spectrum(w)


def _branch_state(pair: RedistStatePair, which: str, a: int) -> PureState:
    """Normalised component |omega^a> (or |psi^a>) on R' B C."""
    p = pair.params
    vec = getattr(pair, which).vector.reshape(p.d_a, p.d, p.d, p.d, p.d_a)[a, :, :, :, a]
    return PureState.normalized(vec.reshape(-1), HilbertDim(("Rp", "B", "C"), (p.d,) * 3))


def redist_quantities(pair: RedistStatePair) -> dict:
    """I(R;C|B)_Psi, S(Psi_C), a certified upper bound on I_max(R;B)_omega, and I(R';BC)
    of the GHZ branches (averaged over a) together with the full I(R;BC)_omega."""
    p = pair.params
    dim = p.dim
    R = ["RA", "Rp"]
    S = lambda st, regs: _entropy_pure(st, regs, dim)
    psi, ghz = pair.psi, pair.ghz
    s_rb, s_bc, s_b, s_rbc = S(psi, R + ["B"]), S(psi, ["B", "C"]), S(psi, ["B"]), S(psi, R + ["B", "C"])
    cqmi_psi = s_rb + s_bc - s_b - s_rbc
    s_c = S(psi, ["C"])

    om_rb = partial_trace(ghz, R + ["B"], dim).matrix
    om_r = partial_trace(ghz, R, dim).matrix
    imax_ub = dmax(om_rb, np.kron(om_r, np.eye(p.d) / p.d))

    branch = []
    bdim = HilbertDim(("Rp", "B", "C"), (p.d,) * 3)
    for a in range(p.d_a):
        st = _branch_state(pair, "ghz", a)
        branch.append(_entropy_pure(st, ["Rp"], bdim) + _entropy_pure(st, ["B", "C"], bdim))
    i_branch = float(np.mean(branch))
    i_full = S(ghz, R) + S(ghz, ["B", "C"]) - S(ghz, R + ["B", "C"])
    return {
        "cqmi_psi": cqmi_psi,
        "s_psi_c": s_c,
        "imax_rb_ub": imax_ub,
        "i_r_bc_ghz": i_branch,
        "i_r_bc_ghz_full": i_full,
        "two_log_d": 2.0 * math.log2(p.d),
        "entropies": {"S(RB)": s_rb, "S(BC)": s_bc, "S(B)": s_b, "S(RBC)": s_rbc, "S(C)": s_c},
    }


def worst_case_redist_bound(d: float, delta: float) -> dict:
    """((1 - 3 delta)/2) log2 d - 1.5, floored at 0, against (1/6) log2 d.

    ``threshold_log2_d`` is the exact log2 d beyond which the value beats (1/6) log2 d
    for this delta; it increases to 18 as delta -> 1/6, which is where the uniform
    condition d > 2^18 comes from.
    """
    if not 0.0 < delta < 1.0 / 6.0:
        raise ValueError("delta must lie in (0, 1/6)")
    lg = math.log2(d)
    value = max(0.0, (1.0 - 3.0 * delta) / 2.0 * lg - 1.5)
    sixth = lg / 6.0
    coef = (1.0 - 3.0 * delta) / 2.0 - 1.0 / 6.0
    return {
        "value": value,
        "one_sixth_log_d": sixth,
        "exceeds_one_sixth": bool(value > sixth),
        "threshold_log2_d": 1.5 / coef,
        "uniform_threshold_log2_d": 18.0,
        "uniform_condition_met": bool(lg > 18.0),
    }


def redistribution_parameters(p: float, eps: float) -> dict:
    """mu = 32 eps^((1-p)/2), beta = 128/(mu eps^p), error 8 sqrt2 eps^((1-p)/4),
    admissible eps <= (1/70)^(4/(1-p)); worst-case budget factor 2/(mu (1 - eps))."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if eps <= 0:
        raise ValueError("eps must be positive")
    mu = 32.0 * eps ** ((1.0 - p) / 2.0)
    beta = 128.0 / (mu * eps ** p)
    err = 8.0 * math.sqrt(2.0) * eps ** ((1.0 - p) / 4.0)
    eps_max = (1.0 / 70.0) ** (4.0 / (1.0 - p))
    return {
        "p": p,
        "eps": eps,
        "mu": mu,
        "beta": beta,
        "error_bound": err,
        "eps_max": eps_max,
        "eps_admissible": bool(eps <= eps_max),
        "error_below_one_sixth": bool(err < 1.0 / 6.0),
        "wc_budget_formula": "2*C/(mu*(1-eps))",
        "wc_budget_factor": 2.0 / (mu * (1.0 - eps)),
    }
