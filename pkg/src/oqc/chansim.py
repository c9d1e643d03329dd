"""Classical-quantum channels j -> |Psi_j>, their capacity, and the closed-form bounds
comparing capacity with the cost of simulating the channel."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qcore import Ensemble, PureState, binary_entropy, eigh_psd, entropy_of_spectrum

MODES = ("oneway", "rounds", "interactive")


class GateFailure(ValueError):
    def __init__(self, msg: str, record: dict):
        super().__init__(msg)
        self.record = record


@dataclass(frozen=True)
class CqChannel:
    outputs: tuple[PureState, ...]

    def __post_init__(self):
        outs = tuple(o if isinstance(o, PureState) else PureState(o) for o in self.outputs)
        if not outs:
            raise ValueError("channel needs at least one input")
        d = outs[0].d
        if any(o.d != d for o in outs):
            raise ValueError("all outputs must share one dimension")
        object.__setattr__(self, "outputs", outs)

    @classmethod
    def from_ensemble(cls, ens: Ensemble) -> "CqChannel":
        return cls(ens.states)

    @property
    def m(self) -> int:
        return len(self.outputs)

    @property
    def d(self) -> int:
        return self.outputs[0].d

    def vectors(self) -> np.ndarray:
        return np.stack([o.vector for o in self.outputs])


def output_entropy(ch: CqChannel, p: Sequence[float]) -> float:
    """S(sum_j p_j |Psi_j><Psi_j|), the Holevo quantity for pure outputs."""
    v = ch.vectors()
    rho = (v.T * np.asarray(p, float)) @ v.conj()
    w, _ = eigh_psd(rho)
    return entropy_of_spectrum(w)


def _divergences(v: np.ndarray, p: np.ndarray) -> np.ndarray:
    """D(Psi_j || rho_p) = -<Psi_j| log2 rho_p |Psi_j> for every j (inf off support)."""
    rho = (v.T * p) @ v.conj()
    w, u = eigh_psd(rho)
    c = np.abs(v.conj() @ u) ** 2  # (m, d) weights on the eigenbasis
    supp = w > 1e-15
    out = -(c[:, supp] @ np.log2(w[supp]))
    leak = c[:, ~supp].sum(axis=1)
    out[leak > 1e-12] = np.inf
    return out


def cq_capacity(ch: CqChannel, tol: float = 1e-10, max_iter: int = 20000) -> dict:
    """Holevo capacity by Blahut-Arimoto iteration, with the uniform-input entropy.

    For pure outputs the capacity is max_p S(rho_p). Each step reweights
    p_j by 2^{D(Psi_j||rho_p)}. max_j D(Psi_j||rho_p) upper-bounds the capacity at every
    step, so the returned interval [lower, upper] is certified.
    """
    v = ch.vectors()
    m = ch.m
    uniform = output_entropy(ch, np.full(m, 1.0 / m))
    if m == 1:
        return {"capacity": 0.0, "upper": 0.0, "uniform_entropy": 0.0, "iterations": 0,
                "uniform_is_maximizer": True, "input_distribution": [1.0]}
    p = np.full(m, 1.0 / m)
    lower, upper = uniform, np.inf
    it = 0
    for it in range(1, max_iter + 1):
        dj = _divergences(v, p)
        lower = float(p @ dj)
        upper = float(dj.max())
        if upper - lower <= tol:
            break
        p = p * np.exp2(dj - upper)
        p /= p.sum()
    return {
        "capacity": lower,
        "upper": upper,
        "uniform_entropy": uniform,
        "iterations": it,
        "uniform_is_maximizer": bool(upper - uniform <= 1e-6),
        "input_distribution": p.tolist(),
    }


def capacity_bound(d: float, delta: float, eps: float = 0.0) -> float:
    """delta log2 d + H(delta) + 2 (plus eps log2 d for a realised concentration eps)."""
    return (delta + eps) * math.log2(d) + binary_entropy(delta) + 2.0


def one_shot_capacity_upper(C: float, eta: float) -> float:
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    return (C + binary_entropy(eta)) / (1.0 - eta)


def simulation_cost_lower(d: float, delta: float, eta: float, mode: str = "oneway",
                          r: int | None = None, strict: bool = False) -> dict:
    """Closed-form lower bounds on the cost of simulating the hard channel.

    oneway:      (1 - sqrt eta)^2 log2(d delta / 128)
    rounds(r):   log2(d delta / 128) / (20 log2 r)
    interactive: log2(d delta / 128) / (30 (log2 log2 d - 2 log2 eta))

    Each is floored at 0. Gates: eta < (delta/8)^2 for oneway and rounds; for
    interactive both (delta/8)^4 and (delta/10)^4 are reported and the first decides.
    With ``strict`` an inadmissible eta raises GateFailure.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not 0.0 < eta < 1.0 or not 0.0 < delta < 1.0:
        raise ValueError("eta and delta must lie in (0, 1)")
    lg = math.log2(d)
    core = lg + math.log2(delta) - 7.0
    gates: dict = {}
    if mode == "oneway":
        val = (1.0 - math.sqrt(eta)) ** 2 * core
        gates["eta_lt_(delta/8)^2"] = eta < (delta / 8.0) ** 2
        admissible = gates["eta_lt_(delta/8)^2"]
    elif mode == "rounds":
        if r is None or r < 2:
            raise ValueError("rounds mode needs r >= 2")
        val = core / (20.0 * math.log2(r))
        gates["eta_lt_(delta/8)^2"] = eta < (delta / 8.0) ** 2
        admissible = gates["eta_lt_(delta/8)^2"]
    else:
        if lg <= 1.0:
            raise ValueError("interactive bound needs log2 d > 1")
        val = core / (30.0 * (math.log2(lg) - 2.0 * math.log2(eta)))
        gates["eta_lt_(delta/8)^4"] = eta < (delta / 8.0) ** 4
        gates["eta_lt_(delta/10)^4"] = eta < (delta / 10.0) ** 4
        admissible = gates["eta_lt_(delta/8)^4"]
    rec = {
        "mode": mode,
        "r": r,
        "value": max(0.0, val),
        "raw": val,
        "log2_d_delta_over_128": core,
        "gates": gates,
        "admissible": bool(admissible),
    }
    if strict and not admissible:
        raise GateFailure(f"eta = {eta} outside the admissible range for mode {mode}: {gates}", rec)
    return rec


def separation_gap(log2_d: float) -> float:
    """oneway lower bound minus one-shot capacity upper bound at delta = 1/log2 d,
    eta = (delta/8)^2 / 2."""
    d = 2.0 ** log2_d
    delta = 1.0 / log2_d
    eta = (delta / 8.0) ** 2 / 2.0
    lower = simulation_cost_lower(d, delta, eta, "oneway")["raw"]
    upper = one_shot_capacity_upper(capacity_bound(d, delta), eta)
    return lower - upper


def separation_crossover(max_log2_d: float = 60.0, tol: float = 1e-9) -> dict:
    """Smallest log2 d (scanning up, then bisecting) where the simulation cost lower bound
    exceeds the one-shot capacity upper bound."""
    grid = np.arange(2.0, max_log2_d + 1e-12, 0.25)
    gaps = [separation_gap(x) for x in grid]
    hit = next((i for i, g in enumerate(gaps) if g > 0), None)
    if hit is None:
        return {"exists": False, "log2_d_star": None, "max_log2_d": max_log2_d}
    if hit == 0:
        lo = hi = float(grid[0])
    else:
        lo, hi = float(grid[hit - 1]), float(grid[hit])
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if separation_gap(mid) > 0:
                hi = mid
            else:
                lo = mid
    return {
        "exists": True,
        "log2_d_star": hi,
        "d_star": 2.0 ** hi,
        "max_log2_d": max_log2_d,
        "gap_at_star": separation_gap(hi),
        "gap_at_60": separation_gap(min(60.0, max_log2_d)),
    }
