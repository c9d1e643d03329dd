"""The hard ensemble: Haar samples x_i orthogonal to |0>, embedded as
sqrt(1 - delta)|0> + sqrt(delta)|x_i>, plus the trace-norm concentration certificates.

The x_i are Haar on V = |0>^perp, a (d-1)-dimensional space. Their exact moments are
E|x><x| = P/(d-1) and E|x><x|^{(x)2} = (P(x)P + F_V)/((d-1)d). The default targets use
these; ``convention="ambient"`` switches to P/d and (P(x)P + F)/(d(d+1)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qcore import (
    Ensemble,
    PureState,
    binary_entropy,
    haar_pure_state,
    rng_for,
    von_neumann_entropy,
)

ORTH_TOL = 1e-10
Z3_MAX_D = 24
CONVENTIONS = ("haar", "ambient")


class ConstructionFailed(RuntimeError):
    def __init__(self, msg: str, report: "ConcentrationReport"):
        super().__init__(msg)
        self.report = report


@dataclass(frozen=True)
class HardEnsembleParams:
    d: int
    delta: float
    m: int
    eps: float
    seed: int = 0

    def __post_init__(self):
        # the concentration analysis wants delta < 1/4; the construction itself is fine at 1/4
        if not 0.0 < self.delta <= 0.25:
            raise ValueError(f"delta must lie in (0, 1/4], got {self.delta!r}")
        if self.d <= 4:
            raise ValueError(f"d must exceed 4, got {self.d!r}")
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    @property
    def prescribed_m(self) -> float:
        """Sample count 8 d^5 / eps^2 that the union-bound argument asks for."""
        return 8.0 * self.d ** 5 / self.eps ** 2

    @staticmethod
    def full_scale_size(d: int) -> int:
        """Ensemble size with eps = 1/d: 8 d^5 / (1/d)^2 = 8 d^7."""
        return 8 * d ** 7


@dataclass
class ConcentrationReport:
    norm1: float
    norm2: float
    norm3: float | None
    eps_target: float
    passed: tuple
    m: int
    d: int
    convention: str = "haar"
    attempts: int = 1
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(p is not False for p in self.passed)

    @property
    def eps_realized(self) -> float:
        return max(n for n in (self.norm1, self.norm2, self.norm3) if n is not None)

    def to_json(self) -> dict:
        return {
            "norm1": self.norm1,
            "norm2": self.norm2,
            "norm3": self.norm3,
            "eps_target": self.eps_target,
            "eps_realized": self.eps_realized,
            "passed": list(self.passed),
            "m": self.m,
            "d": self.d,
            "convention": self.convention,
            "attempts": self.attempts,
            "notes": list(self.notes),
        }


def _anchor(d: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[0] = 1.0
    return e


def _xvec(x) -> np.ndarray:
    return np.asarray(x.vector if isinstance(x, PureState) else x, dtype=complex).reshape(-1)


def z_matrices(x, delta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    v = _xvec(x)
    if abs(v[0]) > ORTH_TOL:
        raise ValueError(f"sample must be orthogonal to |0>, overlap {abs(v[0]):.3e}")
    d = v.size
    e0 = _anchor(d)
    z1 = np.outer(v, v.conj())
    z2 = math.sqrt(delta - delta * delta) * (np.outer(v, e0) + np.outer(e0, v.conj())) + delta * z1
    vv = np.kron(v, v)
    z3 = np.outer(vv, vv.conj())
    return z1, z2, z3


def _trace_norm(h: np.ndarray) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (h + h.conj().T)))))


def swap(d: int) -> np.ndarray:
    f = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            f[j * d + i, i * d + j] = 1.0
    return f


def targets(d: int, delta: float, convention: str = "haar", with_z3: bool = True):
    """Expected values of Z1, Z2, Z3 under the chosen convention."""
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    p = np.eye(d, dtype=complex)
    p[0, 0] = 0.0
    n1 = d - 1 if convention == "haar" else d
    t1 = p / n1
    t2 = delta * p / n1
    t3 = None
    if with_z3:
        pp = np.kron(p, p)
        fv = swap(d) @ pp
        t3 = (pp + fv) / ((d - 1) * d if convention == "haar" else d * (d + 1))
    return t1, t2, t3


def concentration_check(samples, delta: float, eps: float, convention: str = "haar",
                        force_z3: bool = False) -> ConcentrationReport:
    """Trace-norm distances of the sample means of Z1, Z2, Z3 from their targets."""
    x = np.stack([_xvec(s) for s in samples])
    m, d = x.shape
    if np.max(np.abs(x[:, 0])) > ORTH_TOL:
        raise ValueError("all samples must be orthogonal to |0>")
    do_z3 = d <= Z3_MAX_D or force_z3
    t1, t2, t3 = targets(d, delta, convention, with_z3=do_z3)
    mean1 = (x.T @ x.conj()) / m
    mean_x = x.mean(axis=0)
    e0 = _anchor(d)
    mean2 = math.sqrt(delta - delta * delta) * (np.outer(mean_x, e0) + np.outer(e0, mean_x.conj())) + delta * mean1
    n1 = _trace_norm(mean1 - t1)
    n2 = _trace_norm(mean2 - t2)
    notes = []
    if do_z3:
        xx = (x[:, :, None] * x[:, None, :]).reshape(m, d * d)
        mean3 = (xx.T @ xx.conj()) / m
        n3 = _trace_norm(mean3 - t3)
        p3 = n3 <= eps
    else:
        n3, p3 = None, None
        notes.append(f"Z3 check not evaluated for d > {Z3_MAX_D}")
    return ConcentrationReport(n1, n2, n3, eps, (n1 <= eps, n2 <= eps, p3), m, d, convention, 1, notes)


def sample_batch(d: int, m: int, seed: int, attempt: int = 0) -> list[PureState]:
    """m Haar samples orthogonal to |0>, each from its own (seed, attempt, i) stream."""
    e0 = _anchor(d)
    return [haar_pure_state(d, orthogonal_to=e0, rng=rng_for(seed, attempt, i)) for i in range(m)]


def embed(samples, delta: float) -> Ensemble:
    d = _xvec(samples[0]).size
    e0 = _anchor(d)
    a, b = math.sqrt(1.0 - delta), math.sqrt(delta)
    vecs = [a * e0 + b * _xvec(s) for s in samples]
    return Ensemble.uniform([v / np.linalg.norm(v) for v in vecs])


def embedded_samples(ens: Ensemble, delta: float) -> np.ndarray:
    """Recover the x_i rows from an embedded ensemble."""
    v = ens.vectors().copy()
    v[:, 0] = 0.0
    return v / math.sqrt(delta)


def build_hard_ensemble(params: HardEnsembleParams, max_retries: int = 10,
                        convention: str = "haar", force_z3: bool = False):
    """Resample whole batches until all three concentration checks pass."""
    report = None
    for attempt in range(max_retries + 1):
        xs = sample_batch(params.d, params.m, params.seed, attempt)
        report = concentration_check(xs, params.delta, params.eps, convention, force_z3)
        report.attempts = attempt + 1
        if report.ok:
            report.notes.append(f"prescribed m = 8 d^5 / eps^2 = {params.prescribed_m:.6g}; used m = {params.m}")
            return embed(xs, params.delta), report
    raise ConstructionFailed(
        f"concentration checks failed after {max_retries + 1} batches "
        f"(norms {report.norm1:.4g}, {report.norm2:.4g}, {report.norm3})", report)


def entropy_bound(d: int, delta: float, eps: float) -> float:
    return (delta + eps) * math.log2(d) + binary_entropy(delta) + 1.0


def entropy_bound_check(ens: Ensemble, delta: float, eps: float) -> tuple[float, float, bool]:
    s = von_neumann_entropy(ens.average())
    b = entropy_bound(ens.dim.d, delta, eps)
    return s, b, bool(s <= b)


def overlap_moments(xs: np.ndarray, Q: np.ndarray, delta: float, norm1: float,
                    norm3: float | None, convention: str = "haar") -> dict:
    """First and second moments of <Psi_i|Q|Psi_i> for Q orthogonal to |0>, with the
    bands implied by the realised concentration norms (Hoelder with ||Q||_inf = 1)."""
    d = xs.shape[1]
    r = float(np.real(np.trace(Q)))
    ov = np.real(np.einsum("ni,ij,nj->n", xs.conj(), Q, xs))
    first = float(delta * ov.mean())
    second = float(delta ** 2 * np.mean(ov ** 2))
    n1 = d - 1 if convention == "haar" else d
    c1 = delta * r / n1
    c2 = delta ** 2 * (r * r + r) / ((d - 1) * d if convention == "haar" else d * (d + 1))
    out = {
        "rank_q": r,
        "first": first,
        "first_band": (c1 - delta * norm1, c1 + delta * norm1),
        "second": second,
    }
    out["first_ok"] = bool(out["first_band"][0] - 1e-12 <= first <= out["first_band"][1] + 1e-12)
    if norm3 is not None:
        out["second_band"] = (c2 - delta ** 2 * norm3, c2 + delta ** 2 * norm3)
        out["second_ok"] = bool(out["second_band"][0] - 1e-12 <= second <= out["second_band"][1] + 1e-12)
    return out
