"""State splitting: convex split, feasible solutions of the Q(eta, r) program, a
message-level simulation of the rejection-sampling protocol, the simple lower bound,
and the ordered-factorisation combinatorics behind it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import codec
from .qcore import (
    DensityOperator,
    Ensemble,
    HilbertDim,
    as_matrix,
    dmax,
    eigh_psd,
    fidelity,
    partial_trace,
    rng_for,
)

TENSOR_CAP = 4096
SLACK = 1e-9

Tuple = tuple[int, ...]


# --- convex split ------------------------------------------------------------------------

def typical_zero_cap(delta: float) -> int:
    return math.ceil((1.0 / delta) * math.log2(1.0 / delta))


@dataclass
class ConvexSplitInstance:
    p: Sequence[float]
    psi: Sequence
    omega: Sequence
    delta: float

    def __post_init__(self):
        self.p = [float(x) for x in self.p]
        self.psi = [as_matrix(x) for x in self.psi]
        self.omega = [as_matrix(x) for x in self.omega]
        n = len(self.p)
        if not (len(self.psi) == len(self.omega) == n) or n == 0:
            raise ValueError("p, psi and omega need the same non-zero length")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if abs(math.fsum(self.p) - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1, got {math.fsum(self.p)!r}")
        for i, pi in enumerate(self.p):
            if not 0.0 < pi < 1.0 - self.delta:
                raise ValueError(f"p[{i}] = {pi} outside (0, 1 - delta) = (0, {1 - self.delta})")
            limit = 2.0 ** (-dmax(self.psi[i], self.omega[i]))
            if pi > limit + SLACK:
                raise ValueError(f"p[{i}] = {pi} exceeds 2^-Dmax(psi||omega) = {limit}")

    @property
    def typ_zero_cap(self) -> int:
        return typical_zero_cap(self.delta)


@dataclass
class ConvexSplitResult:
    tau: np.ndarray
    per_i: list[np.ndarray]
    N: list[float]
    complements: list[np.ndarray]
    dmax_tau: float
    q_ratio_max: float  # max over type strings s of q(s) / (p^s / delta^2)
    bound: float
    delta: float

    @property
    def n_ok(self) -> bool:
        return min(self.N) >= 1.0 - self.delta - SLACK

    def to_json(self) -> dict:
        return {"dmax_tau": self.dmax_tau, "bound": self.bound, "N": list(self.N),
                "q_ratio_max": self.q_ratio_max, "ok": self.ok and self.n_ok}

    @property
    def ok(self) -> bool:
        return self.dmax_tau <= self.bound + SLACK and self.q_ratio_max <= 1.0 + SLACK


def _complement(psi: np.ndarray, omega: np.ndarray, p: float) -> np.ndarray:
    c = (omega - p * psi) / (1.0 - p)
    w, v = eigh_psd(c)
    c = (v * w) @ v.conj().T
    return c / np.real(np.trace(c))


def convex_split_build(inst: ConvexSplitInstance) -> ConvexSplitResult:
    """tau = sum_i p_i Psi_i (x) tau^(-i), with tau^(-i) the typical-set mixture of the
    other registers; checks D_max(tau || (x) omega_i) <= 2 log2(1/delta) and
    q(s) <= p^s / delta^2 over all type strings."""
    n = len(inst.p)
    dc = inst.psi[0].shape[0]
    if dc ** n > TENSOR_CAP:
        raise ValueError(f"tensor dimension {dc}^{n} exceeds cap {TENSOR_CAP}")
    delta = inst.delta
    cap = inst.typ_zero_cap
    comp = [_complement(inst.psi[i], inst.omega[i], inst.p[i]) for i in range(n)]
    states = [(inst.psi[i], comp[i]) for i in range(n)]
    probs = [(inst.p[i], 1.0 - inst.p[i]) for i in range(n)]

    per_i, norms = [], []
    for i in range(n):
        others = [j for j in range(n) if j != i]
        mix = np.zeros((dc ** (n - 1),) * 2, dtype=complex) if others else np.ones((1, 1), dtype=complex)
        total = 0.0
        for t in itertools.product((0, 1), repeat=n - 1):
            if t.count(0) > cap:
                continue
            w = math.prod(probs[j][b] for j, b in zip(others, t))
            total += w
            if others:
                op = np.ones((1, 1), dtype=complex)
                for j, b in zip(others, t):
                    op = np.kron(op, states[j][b])
                mix += w * op
        per_i.append(mix / total if others else mix)
        norms.append(total)

    # place Psi_i in slot i and tau^(-i) on the rest, in register order
    tau = np.zeros((dc ** n,) * 2, dtype=complex)
    for i in range(n):
        term = np.kron(inst.psi[i], per_i[i]) if n > 1 else inst.psi[i]
        tau += inst.p[i] * _move_first_to(term, i, n, dc)
    target = np.ones((1, 1), dtype=complex)
    for om in inst.omega:
        target = np.kron(target, om)
    d_tau = dmax(0.5 * (tau + tau.conj().T), target)

    # coefficients q(s) of tau in the product basis Psi_s
    ratio = 0.0
    for s in itertools.product((0, 1), repeat=n):
        ps = math.prod(probs[j][b] for j, b in enumerate(s))
        q = 0.0
        for i in range(n):
            if s[i] != 0:
                continue
            rest = [s[j] for j in range(n) if j != i]
            if rest.count(0) > cap:
                continue
            q += inst.p[i] * math.prod(probs[j][s[j]] for j in range(n) if j != i) / norms[i]
        if ps > 0:
            ratio = max(ratio, q / (ps / delta ** 2))
    return ConvexSplitResult(tau, per_i, norms, comp, d_tau, ratio, 2.0 * math.log2(1.0 / delta), delta)


def _move_first_to(op: np.ndarray, i: int, n: int, dc: int) -> np.ndarray:
    """Permute tensor factors so the first one lands in slot i."""
    if i == 0 or n == 1:
        return op
    order = list(range(1, i + 1)) + [0] + list(range(i + 1, n))
    # order[k] = which source factor goes to slot k
    t = op.reshape((dc,) * (2 * n))
    t = t.transpose(order + [n + k for k in order])
    return t.reshape(dc ** n, dc ** n)


# --- feasible solutions ------------------------------------------------------------------

def _c_marginal(ens: Ensemble, x: int, c_label: str = "C") -> np.ndarray:
    dim = ens.dim
    if c_label in dim.labels and len(dim.labels) > 1:
        return partial_trace(ens.states[x], [c_label], dim).matrix
    if len(dim.labels) == 1:
        return ens.states[x].density().matrix
    raise KeyError(f"ensemble has no register {c_label!r}; have {dim.labels}")


def c_marginals(ens: Ensemble, c_label: str = "C") -> list[np.ndarray]:
    return [_c_marginal(ens, x, c_label) for x in range(len(ens))]


@dataclass
class FeasibleSolution:
    """Witness for the Q(eta, r) program on an ensemble indexed by x = 0..n-1.

    ``p``, ``eps`` and ``witness`` are keyed by (x, tuple); ``omega`` by tuple.
    """

    r: int
    eta: float
    omega: dict
    p: dict
    eps: dict
    witness: dict

    @property
    def tuples(self) -> list[Tuple]:
        return sorted(self.omega)

    def objective(self, probs: Sequence[float]) -> float:
        return math.fsum(probs[x] * pt * math.log2(math.prod(t)) for (x, t), pt in self.p.items())

    def to_json(self) -> dict:
        from .io import operator_to_json

        keyed = lambda x, t: {"x": x, "tuple": list(t)}
        return {
            "r": self.r,
            "eta": self.eta,
            "omega": [{"tuple": list(t), "state": operator_to_json(self.omega[t])} for t in self.tuples],
            "entries": [
                {**keyed(x, t), "p": self.p[(x, t)], "eps": self.eps[(x, t)],
                 "witness": operator_to_json(self.witness[(x, t)])}
                for (x, t) in sorted(self.p)
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "FeasibleSolution":
        from .io import operator_from_json

        omega = {tuple(o["tuple"]): operator_from_json(o["state"]) for o in data["omega"]}
        p, eps, wit = {}, {}, {}
        for e in data["entries"]:
            key = (int(e["x"]), tuple(e["tuple"]))
            p[key] = float(e["p"])
            eps[key] = float(e["eps"])
            wit[key] = operator_from_json(e["witness"])
        return cls(int(data["r"]), float(data["eta"]), omega, p, eps, wit)


@dataclass
class Validation:
    ok: bool
    objective: float
    violations: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"ok": self.ok, "objective": self.objective, "violations": list(self.violations)}


def validate_feasible_solution(ens: Ensemble, sol: FeasibleSolution, c_label: str = "C") -> Validation:
    v: list[str] = []
    n = len(ens)
    marg = c_marginals(ens, c_label)
    dc = marg[0].shape[0]
    for t, om in sol.omega.items():
        if len(t) != sol.r or any((not isinstance(i, (int, np.integer))) or i < 1 for i in t):
            v.append(f"tuple {t} is not an r={sol.r} tuple of positive integers")
        if as_matrix(om).shape[0] != dc:
            v.append(f"omega{t} has dimension {as_matrix(om).shape[0]}, C has {dc}")
    for (x, t) in sol.p:
        if not 0 <= x < n:
            v.append(f"entry for unknown x={x}")
        if t not in sol.omega:
            v.append(f"entry ({x}, {t}) uses a tuple with no omega")
        if (x, t) not in sol.eps or (x, t) not in sol.witness:
            v.append(f"entry ({x}, {t}) lacks eps or witness")
    if v:
        return Validation(False, float("nan"), v)

    for x in range(n):
        row = [pt for (xx, _), pt in sol.p.items() if xx == x]
        if any(pt < -SLACK for pt in row):
            v.append(f"x={x}: negative probability")
        s = math.fsum(row)
        if abs(s - 1.0) > SLACK:
            v.append(f"x={x}: probabilities sum to {s!r}, not 1")
    budget = math.fsum(ens.probs[x] * pt * sol.eps[(x, t)] ** 2 for (x, t), pt in sol.p.items())
    if budget > sol.eta ** 2 + SLACK:
        v.append(f"error budget {budget:.6g} exceeds eta^2 = {sol.eta ** 2:.6g}")
    for (x, t), pt in sorted(sol.p.items()):
        e = sol.eps[(x, t)]
        if not 0.0 <= e <= 1.0:
            v.append(f"({x}, {t}): eps={e} outside [0, 1]")
        if pt <= 0:
            continue
        wit = sol.witness[(x, t)]
        f = fidelity(wit, marg[x])
        if f < 1.0 - e - SLACK:
            v.append(f"({x}, {t}): witness fidelity {f:.9g} < 1 - eps = {1 - e:.9g}")
        cap = 2.0 ** (-dmax(wit, sol.omega[t]))
        if pt > cap + SLACK:
            v.append(f"({x}, {t}): p={pt:.9g} exceeds 2^-Dmax(witness||omega) = {cap:.9g}")
    return Validation(not v, sol.objective(ens.probs), v)


def baseline_solution(ens: Ensemble, r: int = 1, eta: float = 0.1, c_label: str = "C") -> FeasibleSolution:
    """Each x gets its own tuple (rank(x), 1, ..., 1) with omega = Psi^x_C, eps = 0, p = 1.

    rank(x) orders x by decreasing probability (ties by index), so the most likely
    input pays nothing.
    """
    marg = c_marginals(ens, c_label)
    order = sorted(range(len(ens)), key=lambda x: (-ens.probs[x], x))
    omega, p, eps, wit = {}, {}, {}, {}
    for rank, x in enumerate(order, start=1):
        t = (rank,) + (1,) * (r - 1)
        omega[t] = DensityOperator(marg[x])
        p[(x, t)] = 1.0
        eps[(x, t)] = 0.0
        wit[(x, t)] = DensityOperator(marg[x])
    return FeasibleSolution(r, eta, omega, p, eps, wit)


def maximally_mixed_solution(ens: Ensemble, r: int = 1, eta: float = 0.1, c_label: str = "C") -> FeasibleSolution:
    """Tuples (j, 1, ..., 1) for j = 1..dim(C), all with omega = I/dim(C) and p = 1/dim(C).

    Feasible for any ensemble since D_max(rho || I/d) <= log2 d.
    """
    marg = c_marginals(ens, c_label)
    dc = marg[0].shape[0]
    mixed = DensityOperator(np.eye(dc, dtype=complex) / dc)
    omega, p, eps, wit = {}, {}, {}, {}
    for j in range(1, dc + 1):
        t = (j,) + (1,) * (r - 1)
        omega[t] = mixed
        for x in range(len(ens)):
            p[(x, t)] = 1.0 / dc
            eps[(x, t)] = 0.0
            wit[(x, t)] = DensityOperator(marg[x])
    return FeasibleSolution(r, eta, omega, p, eps, wit)


# --- protocol simulation -----------------------------------------------------------------

@dataclass
class CostRecord:
    x: int
    branch: str
    k: int | None
    tuple: Tuple
    flag_bits: int
    k_bits: int
    tuple_bits: int

    @property
    def bits_total(self) -> int:
        return self.flag_bits + self.k_bits + self.tuple_bits

    def message(self, gcode: codec.GolombCode | None) -> str:
        flag = "0" if self.branch == "G" else "1"
        kb = gcode.encode(self.k) if self.branch == "G" and gcode is not None else ""
        return flag + kb + codec.tuple_encode(self.tuple)

    def to_row(self) -> dict:
        return {
            "x": self.x, "branch": self.branch, "k": self.k if self.k is not None else "",
            "tuple": " ".join(map(str, self.tuple)), "flag_bits": self.flag_bits,
            "k_bits": self.k_bits, "tuple_bits": self.tuple_bits, "bits_total": self.bits_total,
        }


@dataclass
class SimulationResult:
    mean_cost: float
    stderr: float
    histogram: dict
    analytic_error_bound: float
    exact_mean: float
    cost_bound: float
    records: list[CostRecord]
    branches: dict

    def to_json(self) -> dict:
        return {
            "mean_cost": self.mean_cost,
            "stderr": self.stderr,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "analytic_error_bound": self.analytic_error_bound,
            "exact_mean": self.exact_mean,
            "cost_bound": self.cost_bound,
            "branches": {str(k): v for k, v in sorted(self.branches.items())},
        }


def _rows(sol: FeasibleSolution, n: int):
    rows = {x: [] for x in range(n)}
    for (x, t), pt in sorted(sol.p.items()):
        if pt > 0:
            rows[x].append((t, pt))
    return rows


def _branch_of(row, delta: float):
    for t, pt in row:
        if pt >= 1.0 - delta:
            return "B", t, pt
    return "G", None, None


def achievability_bound(objective: float, r: int, delta: float) -> float:
    """objective + 2 r log2 max(objective, 2) + 4 r + 2 log2(4/delta)."""
    return objective + 2 * r * math.log2(max(objective, 2.0)) + 4 * r + 2 * math.log2(4.0 / delta)


def exact_expected_cost(ens: Ensemble, sol: FeasibleSolution, delta: float) -> float:
    """Mean message length by direct summation over (x, branch, tuple)."""
    gcode = codec.geometric_code(delta)
    k_mean = codec.expected_length(gcode, delta)
    ones = codec.tuple_length((1,) * sol.r)
    total = 0.0
    for x, row in _rows(sol, len(ens)).items():
        branch, tx, px = _branch_of(row, delta)
        if branch == "B":
            cost = 1 + px * codec.tuple_length(tx) + (1 - px) * ones
        else:
            cost = 1 + k_mean + math.fsum(pt * codec.tuple_length(t) for t, pt in row)
        total += ens.probs[x] * cost
    return float(total)


def analytic_error_bound(ens: Ensemble, sol: FeasibleSolution, delta: float) -> float:
    budget = math.fsum(ens.probs[x] * pt * sol.eps[(x, t)] ** 2 for (x, t), pt in sol.p.items())
    return budget + 2 * math.sqrt(delta) + delta


def _geometric(u: np.ndarray, s: float) -> np.ndarray:
    """Inverse CDF of P(k) = (1-s)^(k-1) s on k >= 1."""
    if s >= 1.0:
        return np.ones_like(u, dtype=np.int64)
    k = np.ceil(np.log1p(-u) / math.log1p(-s))
    return np.maximum(k, 1).astype(np.int64)


def simulate_one_way_protocol(ens: Ensemble, sol: FeasibleSolution, delta: float, trials: int,
                              seed: int = 0, keep_records: bool = False,
                              check: bool = True) -> SimulationResult:
    """Monte Carlo over messages of the rejection-sampling protocol.

    G inputs (no tuple with p >= 1 - delta) send flag 0, a geometric index k coded with
    the Golomb code, and a tuple drawn from p(x, .). B inputs send flag 1 and either
    their heavy tuple (with its probability) or the all-ones tuple.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if check:
        val = validate_feasible_solution(ens, sol)
        if not val.ok:
            raise ValueError("invalid feasible solution: " + "; ".join(val.violations))
    gcode = codec.geometric_code(delta)
    rows = _rows(sol, len(ens))
    ones = (1,) * sol.r
    rng = rng_for(seed, 3, 1)
    xs = rng.choice(len(ens), size=trials, p=ens.probs)
    u_branch = rng.random(trials)
    u_k = rng.random(trials)
    ks = _geometric(u_k, delta * delta)

    costs = np.empty(trials, dtype=np.int64)
    records: list[CostRecord] = []
    branch_count = {"G": 0, "B": 0}
    tlen_cache: dict = {}

    def tlen(t):
        if t not in tlen_cache:
            tlen_cache[t] = codec.tuple_length(t)
        return tlen_cache[t]

    plan = {}
    for x, row in rows.items():
        branch, tx, px = _branch_of(row, delta)
        cum = np.cumsum([pt for _, pt in row])
        plan[x] = (branch, tx, px, [t for t, _ in row], cum / cum[-1])

    for n in range(trials):
        x = int(xs[n])
        branch, tx, px, ts, cum = plan[x]
        if branch == "B":
            t = tx if u_branch[n] < px else ones
            k, kb = None, 0
        else:
            t = ts[int(np.searchsorted(cum, u_branch[n], side="right").clip(max=len(ts) - 1))]
            k = int(ks[n])
            kb = gcode.length(k)
        tb = tlen(t)
        costs[n] = 1 + kb + tb
        branch_count[branch] += 1
        if keep_records:
            records.append(CostRecord(x, branch, k, t, 1, kb, tb))

    hist: dict = {}
    vals, counts = np.unique(costs, return_counts=True)
    for c, m in zip(vals, counts):
        hist[int(c)] = int(m)
    mean = float(costs.mean())
    se = float(costs.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    obj = sol.objective(ens.probs)
    return SimulationResult(
        mean_cost=mean,
        stderr=se,
        histogram=hist,
        analytic_error_bound=analytic_error_bound(ens, sol, delta),
        exact_mean=exact_expected_cost(ens, sol, delta),
        cost_bound=achievability_bound(obj, sol.r, delta),
        records=records,
        branches=branch_count,
    )


# --- simple lower bound and combinatorics ------------------------------------------------

def simple_lower_bound(q_star: float, gamma: float, r: int) -> float:
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if r < 1:
        raise ValueError("r must be at least 1")
    core = q_star + 2.0 * math.log2(1.0 - gamma)
    if r == 1:
        val = (1.0 - gamma) ** 2 * (core - 1.0)
    else:
        val = (1.0 - gamma) ** 2 * core / (2.0 * math.log2(r) + 8.0)
    return max(0.0, val)


def factorize(k: int) -> dict[int, int]:
    out: dict[int, int] = {}
    n = k
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def ordered_factorizations(k: int, r: int) -> int:
    """Number of r-tuples of positive integers with product k: prod_p C(a_p + r - 1, r - 1)."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    if r < 1:
        raise ValueError("r must be a positive integer")
    return math.prod(math.comb(a + r - 1, r - 1) for a in factorize(k).values())


def ordered_factorizations_brute(k: int, r: int) -> int:
    if r == 1:
        return 1
    return sum(ordered_factorizations_brute(k // j, r - 1) for j in range(1, k + 1) if k % j == 0)


def _spf_sieve(n: int) -> np.ndarray:
    """Smallest prime factor of every k <= n (spf[1] = 1)."""
    spf = np.zeros(n + 1, dtype=np.int64)
    for i in range(2, math.isqrt(n) + 1):
        if spf[i] == 0:
            block = spf[i * i::i]
            block[block == 0] = i
    ks = np.arange(n + 1)
    spf[spf == 0] = ks[spf == 0]
    spf[0] = 0
    return spf


def _counts_upto(n: int, r: int) -> np.ndarray:
    """N(k, r) for k = 0..n (N(0, r) = 0), multiplicative over prime powers."""
    spf = _spf_sieve(n)
    binom = np.array([math.comb(e + r - 1, r - 1) for e in range(n.bit_length() + 1)], dtype=np.int64)
    val = np.ones(n + 1, dtype=np.int64)
    val[0] = 0
    a = np.arange(n + 1, dtype=np.int64)
    a[0] = 1
    while True:
        live = np.nonzero(a > 1)[0]
        if live.size == 0:
            return val
        p = spf[a[live]]
        e = np.zeros(live.size, dtype=np.int64)
        rem = a[live]
        while True:
            hit = rem % p == 0
            if not hit.any():
                break
            rem = np.where(hit, rem // p, rem)
            e += hit
        val[live] *= binom[e]
        a[live] = rem


def min_expected_log_product(b: float, r: int) -> float:
    """min sum_t s_t log2(prod t) over distributions with s_t <= 2^-b on r-tuples.

    The optimum fills tuples in ascending product order at the cap; the count of
    tuples with product k is N(k, r).
    """
    if b <= 0:
        raise ValueError("b must be positive")
    if r < 1:
        raise ValueError("r must be at least 1")
    cap = 2.0 ** (-b)
    if r == 1:
        # N(k, 1) = 1: full mass on 1..K plus a partial share on K + 1
        K = math.floor(2.0 ** b)
        rest = 1.0 - K * cap
        return (math.lgamma(K + 1) / math.log(2.0)) * cap + rest * math.log2(K + 1)
    need = math.ceil(2.0 ** b)  # tuples required (last may be partial)
    n = 64
    while True:
        counts = _counts_upto(n, r)
        if counts.sum() >= need:
            break
        n *= 2
    mass = np.cumsum(counts[1:] * cap)
    stop = int(np.searchsorted(mass, 1.0 - 1e-15))  # index of the tuple class that completes the mass
    logs = np.log2(np.arange(1, stop + 2, dtype=float))
    full = float(np.dot(counts[1:stop + 1] * cap, logs[:stop]))
    prev = float(mass[stop - 1]) if stop > 0 else 0.0
    return full + (1.0 - prev) * float(logs[stop])


def log_product_bounds(b: float, r: int) -> dict:
    """Nominal lower bound, the corrected r = 1 constant, and the exact minimiser."""
    value = min_expected_log_product(b, r)
    out = {"b": b, "r": r, "value": value}
    if r == 1:
        out["nominal_bound"] = b - 1.0
        out["corrected_bound"] = b - math.log2(math.e)
    else:
        out["nominal_bound"] = b / (2.0 * (math.log2(r) + 4.0))
    out["nominal_holds"] = bool(value >= out["nominal_bound"] - 1e-12)
    return out


# --- tiny-instance oracle ----------------------------------------------------------------

def bloch_grid(n: int = 20) -> list[np.ndarray]:
    """Qubit states on an n^3 grid of the Bloch ball (points outside the ball dropped)."""
    xs = np.linspace(-1.0, 1.0, n)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    out = []
    for a, b, c in itertools.product(xs, xs, xs):
        if a * a + b * b + c * c <= 1.0 + 1e-12:
            out.append(0.5 * (np.eye(2) + a * sx + b * sy + c * sz))
    return out


def q_oracle_r1(ens: Ensemble, grid: int = 20, c_label: str = "C") -> dict:
    """Approximate Q(eta, 1) with eps = 0 on a qubit C by greedy filling.

    For r = 1 and eps = 0 the program asks for omega_1, omega_2, ... and p(x, i) <=
    2^-Dmax(Psi^x_C || omega_i); the objective is sum_x p(x) sum_i p(x,i) log2 i.
    Greedy: at each integer i pick the grid omega that absorbs the most remaining
    probability mass (weighted by p(x)), assign p(x,i) = min(cap, remaining). The
    result is a feasible solution, so its objective upper-bounds Q(0, 1); the two
    reference solutions are also tried and the smallest objective wins.
    """
    marg = c_marginals(ens, c_label)
    if marg[0].shape[0] != 2:
        raise ValueError("oracle handles a qubit C only")
    if len(ens) > 3:
        raise ValueError("oracle handles at most three inputs")
    cands = bloch_grid(grid) + marg
    caps = np.array([[2.0 ** (-dmax(m, om)) for om in cands] for m in marg])  # (n, K)
    n = len(ens)
    remaining = np.ones(n)
    omega, p, eps, wit = {}, {}, {}, {}
    i = 0
    while remaining.max() > 1e-12 and i < 64:
        i += 1
        take = np.minimum(caps, remaining[:, None])
        gain = ens.probs @ take
        j = int(np.argmax(gain))
        t = (i,)
        omega[t] = DensityOperator(cands[j])
        for x in range(n):
            if take[x, j] > 0:
                amt = float(take[x, j])
                if remaining[x] - amt < 1e-12:
                    amt = float(remaining[x])
                p[(x, t)] = amt
                eps[(x, t)] = 0.0
                wit[(x, t)] = DensityOperator(marg[x])
        remaining = np.maximum(0.0, remaining - take[:, j])
    best = FeasibleSolution(1, 0.0, omega, p, eps, wit)
    label = "greedy"
    for name, ref in (("baseline", baseline_solution(ens, 1, 0.0, c_label)),
                      ("maximally_mixed", maximally_mixed_solution(ens, 1, 0.0, c_label))):
        if ref.objective(ens.probs) < best.objective(ens.probs):
            best, label = ref, name
    return {"objective": best.objective(ens.probs), "solution": best, "rounds": i, "source": label,
            "approximate": True}
