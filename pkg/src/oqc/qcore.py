"""Dense linear algebra over small Hilbert spaces and the basic information measures.

All logarithms are base 2. States are carried as :class:`DensityOperator` and
:class:`PureState`; every public function also accepts plain numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

TOL_HERM = 1e-10
TOL_PSD = 1e-9
TOL_TRACE = 1e-9
TOL_NORM = 1e-12
SUPPORT_EIG = 1e-10
SUPPORT_LEAK = 1e-9


class DimensionMismatch(ValueError):
    """Raised when two operators live on spaces of different dimension."""

    def __init__(self, a, b):
        super().__init__(f"dimension mismatch: {a} vs {b}")


class InvalidState(ValueError):
    pass


@dataclass(frozen=True)
class HilbertDim:
    """Ordered tensor factorisation of a Hilbert space into labelled registers."""

    labels: tuple[str, ...]
    sizes: tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.sizes):
            raise ValueError("labels and sizes differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"register labels must be unique: {self.labels}")
        if any(int(s) < 1 for s in self.sizes):
            raise ValueError("register sizes must be positive")
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        object.__setattr__(self, "labels", tuple(str(l) for l in self.labels))

    @classmethod
    def single(cls, d: int, label: str = "H") -> "HilbertDim":
        return cls((label,), (d,))

    @classmethod
    def of(cls, **registers: int) -> "HilbertDim":
        return cls(tuple(registers), tuple(registers.values()))

    @property
    def d(self) -> int:
        return int(np.prod(self.sizes))

    def size(self, label: str) -> int:
        return self.sizes[self.index(label)]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown register {label!r}; have {self.labels}") from None

    def restrict(self, keep: Iterable[str]) -> "HilbertDim":
        keep = set(keep)
        labels = tuple(l for l in self.labels if l in keep)
        return HilbertDim(labels, tuple(self.size(l) for l in labels))

    def __add__(self, other: "HilbertDim") -> "HilbertDim":
        return HilbertDim(self.labels + other.labels, self.sizes + other.sizes)

    def to_json(self) -> list[dict]:
        return [{"label": l, "size": s} for l, s in zip(self.labels, self.sizes)]

    @classmethod
    def from_json(cls, data: list[dict]) -> "HilbertDim":
        return cls(tuple(r["label"] for r in data), tuple(r["size"] for r in data))


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian PSD matrix with trace in (0, 1]; sub-normalised states allowed."""

    matrix: np.ndarray
    dim: HilbertDim = None  # type: ignore[assignment]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidState(f"density operator must be square, got shape {m.shape}")
        dim = self.dim if self.dim is not None else HilbertDim.single(m.shape[0])
        if dim.d != m.shape[0]:
            raise DimensionMismatch(dim.d, m.shape[0])
        check_density(m)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", dim)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def eigvals(self) -> np.ndarray:
        return np.clip(np.linalg.eigvalsh(self.matrix), 0.0, None)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True)
class PureState:
    """Unit complex vector."""

    vector: np.ndarray
    dim: HilbertDim = None  # type: ignore[assignment]

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=complex).reshape(-1)
        if abs(np.linalg.norm(v) - 1.0) > TOL_NORM:
            raise InvalidState(f"pure state not normalised: |v| = {np.linalg.norm(v)!r}")
        dim = self.dim if self.dim is not None else HilbertDim.single(v.size)
        if dim.d != v.size:
            raise DimensionMismatch(dim.d, v.size)
        object.__setattr__(self, "vector", v)
        object.__setattr__(self, "dim", dim)

    @classmethod
    def normalized(cls, v, dim: HilbertDim | None = None) -> "PureState":
        v = np.asarray(v, dtype=complex).reshape(-1)
        return cls(v / np.linalg.norm(v), dim)

    @classmethod
    def basis(cls, d: int, j: int = 0, dim: HilbertDim | None = None) -> "PureState":
        v = np.zeros(d, dtype=complex)
        v[j] = 1.0
        return cls(v, dim)

    @property
    def d(self) -> int:
        return self.vector.size

    def density(self) -> DensityOperator:
        return DensityOperator(np.outer(self.vector, self.vector.conj()), self.dim)

    def __array__(self, dtype=None, copy=None):
        return self.vector if dtype is None else self.vector.astype(dtype)


@dataclass(frozen=True)
class Ensemble:
    """Finite list of (probability, pure state) pairs sharing one HilbertDim."""

    probs: np.ndarray
    states: tuple[PureState, ...]
    dim: HilbertDim = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        states = tuple(s if isinstance(s, PureState) else PureState(s) for s in self.states)
        if len(states) != p.size or not states:
            raise ValueError("ensemble needs one probability per state and at least one state")
        if np.any(p < 0) or abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValueError(f"ensemble probabilities must be >= 0 and sum to 1 (sum={p.sum()!r})")
        dim = self.dim if self.dim is not None else states[0].dim
        for s in states:
            if s.dim.d != dim.d:
                raise DimensionMismatch(dim.d, s.dim.d)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "states", tuple(PureState(s.vector, dim) for s in states))
        object.__setattr__(self, "dim", dim)

    @classmethod
    def uniform(cls, vectors: Sequence, dim: HilbertDim | None = None) -> "Ensemble":
        n = len(vectors)
        return cls(np.full(n, 1.0 / n), tuple(PureState(v, dim) for v in vectors), dim)

    def __len__(self) -> int:
        return len(self.states)

    def vectors(self) -> np.ndarray:
        """States as rows of an (n, d) array."""
        return np.stack([s.vector for s in self.states])

    def average(self) -> DensityOperator:
        v = self.vectors()
        rho = (v.T * self.probs) @ v.conj()
        return DensityOperator(_hermitize(rho), self.dim)


Operator = Union[DensityOperator, PureState, np.ndarray]


# --- validation and coercion -------------------------------------------------

def check_density(m: np.ndarray) -> None:
    herm_err = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if herm_err > TOL_HERM:
        raise InvalidState(f"not Hermitian (max |M - M^dag| = {herm_err:.3e})")
    ev = np.linalg.eigvalsh(_hermitize(m))
    if ev.size and ev[0] < -TOL_PSD:
        raise InvalidState(f"not positive semi-definite (min eigenvalue {ev[0]:.3e})")
    tr = float(np.real(np.trace(m)))
    if not (0.0 < tr <= 1.0 + TOL_TRACE):
        raise InvalidState(f"trace {tr!r} outside (0, 1]")


def as_matrix(x: Operator) -> np.ndarray:
    """Coerce a state-like object to its density matrix (validated)."""
    if isinstance(x, DensityOperator):
        return x.matrix
    if isinstance(x, PureState):
        return np.outer(x.vector, x.vector.conj())
    a = np.asarray(x, dtype=complex)
    if a.ndim == 1:
        return np.outer(a, a.conj())
    check_density(a)
    return a


def dim_of(x: Operator) -> HilbertDim:
    if isinstance(x, (DensityOperator, PureState)):
        return x.dim
    a = np.asarray(x)
    return HilbertDim.single(a.shape[0])


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(a.shape[0], b.shape[0])


def eigh_psd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with tiny negative eigenvalues clamped to zero."""
    w, v = np.linalg.eigh(_hermitize(m))
    w = np.where((w < 0) & (w >= -TOL_PSD), 0.0, w)
    return np.clip(w, 0.0, None), v


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    w, v = eigh_psd(m)
    return (v * np.sqrt(w)) @ v.conj().T


def entropy_of_spectrum(p: Iterable[float]) -> float:
    """Shannon entropy in bits with 0 log 0 = 0."""
    p = np.asarray(list(p) if not isinstance(p, np.ndarray) else p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return float(-x * np.log2(x) - (1 - x) * np.log2(1 - x))


# --- measures ------------------------------------------------------------------

def fidelity(rho: Operator, sigma: Operator) -> float:
    """Generalised fidelity ||sqrt(rho) sqrt(sigma)||_1 + sqrt((1 - Tr rho)(1 - Tr sigma))."""
    a, b = as_matrix(rho), as_matrix(sigma)
    _same_dim(a, b)
    s = np.linalg.svd(sqrtm_psd(a) @ sqrtm_psd(b), compute_uv=False)
    ta, tb = np.real(np.trace(a)), np.real(np.trace(b))
    extra = np.sqrt(max(0.0, 1 - ta) * max(0.0, 1 - tb))
    return float(min(1.0, max(0.0, s.sum() + extra)))


def purified_distance(rho: Operator, sigma: Operator) -> float:
    f = fidelity(rho, sigma)
    return float(np.sqrt(max(0.0, 1.0 - f * f)))


def von_neumann_entropy(rho: Operator) -> float:
    m = as_matrix(rho)
    tr = np.real(np.trace(m))
    if abs(tr - 1.0) > TOL_TRACE:
        raise InvalidState(f"entropy needs a normalised state, trace = {tr!r}")
    w, _ = eigh_psd(m)
    return entropy_of_spectrum(w)


def _support_split(sigma: np.ndarray):
    w, v = eigh_psd(sigma)
    supp = w > SUPPORT_EIG
    return w, v, supp


def _outside_support(rho: np.ndarray, v: np.ndarray, supp: np.ndarray) -> bool:
    if supp.all():
        return False
    vo = v[:, ~supp]
    leak = vo.conj().T @ rho @ vo
    return float(np.max(np.abs(leak))) > SUPPORT_LEAK


def dmax(rho: Operator, sigma: Operator) -> float:
    """Max-relative entropy log2 ||sigma^{-1/2} rho sigma^{-1/2}||_inf, +inf off support."""
    a, b = as_matrix(rho), as_matrix(sigma)
    _same_dim(a, b)
    w, v, supp = _support_split(b)
    if _outside_support(a, v, supp):
        return float("inf")
    vs = v[:, supp] / np.sqrt(w[supp])
    m = vs.conj().T @ a @ vs
    top = np.linalg.eigvalsh(_hermitize(m))[-1]
    if top <= 0:
        return float("-inf")
    return float(np.log2(top))


def dmax_pure(psi: PureState | np.ndarray, sigma: Operator) -> float:
    """log2 <psi| sigma^{-1} |psi> on the support of sigma (+inf if psi leaves it)."""
    x = np.asarray(psi.vector if isinstance(psi, PureState) else psi, dtype=complex)
    b = as_matrix(sigma)
    w, v, supp = _support_split(b)
    c = v.conj().T @ x
    if np.sum(np.abs(c[~supp]) ** 2) > SUPPORT_LEAK:
        return float("inf")
    return float(np.log2(np.sum(np.abs(c[supp]) ** 2 / w[supp])))


def relative_entropy(rho: Operator, sigma: Operator) -> float:
    """Tr rho (log rho - log sigma); +inf when supp(rho) is not inside supp(sigma)."""
    a, b = as_matrix(rho), as_matrix(sigma)
    _same_dim(a, b)
    w, v, supp = _support_split(b)
    if _outside_support(a, v, supp):
        return float("inf")
    wa, _ = eigh_psd(a)
    neg_ent = float(np.sum(wa[wa > 0] * np.log2(wa[wa > 0])))
    log_b = (v[:, supp] * np.log2(w[supp])) @ v[:, supp].conj().T
    cross = float(np.real(np.trace(a @ log_b)))
    return neg_ent - cross


# --- registers -----------------------------------------------------------------

def _resolve_dim(x: Operator, dim: HilbertDim | None) -> HilbertDim:
    if dim is not None:
        return dim
    return dim_of(x)


def partial_trace(rho: Operator, keep: Iterable[str], dim: HilbertDim | None = None) -> DensityOperator:
    """Reduced state on the registers in ``keep`` (order follows ``dim``)."""
    dim = _resolve_dim(rho, dim)
    keep = list(keep)
    for k in keep:
        dim.index(k)
    kept = dim.restrict(keep)
    n = len(dim.sizes)
    keep_idx = [dim.index(l) for l in kept.labels]
    drop_idx = [i for i in range(n) if i not in keep_idx]
    dk = int(np.prod([dim.sizes[i] for i in keep_idx])) if keep_idx else 1
    dr = int(np.prod([dim.sizes[i] for i in drop_idx])) if drop_idx else 1
    if isinstance(rho, PureState) or np.asarray(rho).ndim == 1:
        vec = np.asarray(rho.vector if isinstance(rho, PureState) else rho, dtype=complex)
        t = vec.reshape(dim.sizes).transpose(keep_idx + drop_idx).reshape(dk, dr)
        out = t @ t.conj().T
    else:
        m = as_matrix(rho)
        t = m.reshape(dim.sizes + dim.sizes)
        perm = keep_idx + drop_idx
        t = t.transpose(perm + [n + i for i in perm]).reshape(dk, dr, dk, dr)
        out = np.einsum("ajbj->ab", t)
    if not keep_idx:
        kept = HilbertDim(("_",), (1,))
    return DensityOperator(_hermitize(out), kept)


def entropy_of(rho: Operator, registers: Iterable[str], dim: HilbertDim | None = None) -> float:
    registers = list(registers)
    if not registers:
        return 0.0
    return von_neumann_entropy(partial_trace(rho, registers, dim))


def mutual_information(rho: Operator, a: Iterable[str], b: Iterable[str], dim: HilbertDim | None = None) -> float:
    """I(A;B) = S(A) + S(B) - S(AB) for disjoint register groups."""
    a, b = list(a), list(b)
    if set(a) & set(b):
        raise ValueError(f"register groups overlap: {a} / {b}")
    return entropy_of(rho, a, dim) + entropy_of(rho, b, dim) - entropy_of(rho, a + b, dim)


def cqmi(rho: Operator, a: Iterable[str], c: Iterable[str], b: Iterable[str], dim: HilbertDim | None = None) -> float:
    """Conditional mutual information I(A;C|B) = S(AB) + S(BC) - S(B) - S(ABC)."""
    a, c, b = list(a), list(c), list(b)
    if set(a) & set(b) or set(a) & set(c) or set(b) & set(c):
        raise ValueError("register groups overlap")
    return (entropy_of(rho, a + b, dim) + entropy_of(rho, b + c, dim)
            - entropy_of(rho, b, dim) - entropy_of(rho, a + b + c, dim))


# --- sampling ------------------------------------------------------------------

def rng_for(seed, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``; used to split seeds per index."""
    return np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key)))


def haar_pure_state(dim: int | HilbertDim, orthogonal_to: PureState | np.ndarray | None = None,
                    seed=None, rng: np.random.Generator | None = None) -> PureState:
    """Haar-random unit vector, optionally conditioned to be orthogonal to a given state."""
    hd = dim if isinstance(dim, HilbertDim) else HilbertDim.single(int(dim))
    d = hd.d
    if orthogonal_to is not None and d < 2:
        raise ValueError("orthogonality constraint needs dim >= 2")
    rng = rng if rng is not None else np.random.default_rng(seed)
    g = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    if orthogonal_to is not None:
        u = np.asarray(orthogonal_to.vector if isinstance(orthogonal_to, PureState) else orthogonal_to, dtype=complex)
        u = u / np.linalg.norm(u)
        g = g - u * np.vdot(u, g)
        g = g - u * np.vdot(u, g)
    return PureState(g / np.linalg.norm(g), hd)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Random full-rank (or fixed-rank) state from the Hilbert-Schmidt / induced measure."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    return DensityOperator(_hermitize(m / np.real(np.trace(m))))


def maximally_mixed(d: int, dim: HilbertDim | None = None) -> DensityOperator:
    return DensityOperator(np.eye(d, dtype=complex) / d, dim)


def kron(*ops: np.ndarray) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for o in ops:
        out = np.kron(out, o)
    return out
