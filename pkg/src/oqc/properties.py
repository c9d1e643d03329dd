"""Invariant checks run by ``oqc verify-all``. Each check returns a record with pass
counts and the first few failures; ``scale`` shrinks or grows the case counts."""
from __future__ import annotations

import math
import time
from typing import Callable

import numpy as np

from . import chansim, codec, hardens, redist, smooth, splitsim
from .oracles import overlap_oracle_reduced, random_projector
from .qcore import (
    HilbertDim,
    cqmi,
    dmax,
    dmax_pure,
    entropy_of,
    fidelity,
    haar_pure_state,
    purified_distance,
    random_density,
    relative_entropy,
    rng_for,
    von_neumann_entropy,
)

SLACK = 1e-9


class _Tally:
    def __init__(self, name: str):
        self.name = name
        self.passed = 0
        self.total = 0
        self.failures: list = []
        self.t0 = time.perf_counter()

    def check(self, ok: bool, info=None) -> None:
        self.total += 1
        if ok:
            self.passed += 1
        elif len(self.failures) < 5:
            self.failures.append(info)

    def record(self, **extra) -> dict:
        return {"name": self.name, "passed": self.passed, "total": self.total,
                "ok": self.passed == self.total and self.total > 0, "failures": self.failures,
                "seconds": round(time.perf_counter() - self.t0, 3), **extra}


def facts(seed: int, n: int) -> dict:
    t = _Tally("facts")
    for i in range(n):
        rng = rng_for(seed, 21, i)
        d = int(rng.integers(2, 9))
        r1, r2, r3 = (random_density(d, rng).matrix for _ in range(3))
        tri = purified_distance(r1, r3) - purified_distance(r1, r2) - purified_distance(r2, r3)
        t.check(tri <= SLACK, {"case": i, "fact": "triangle", "excess": tri})
        f = fidelity(r1, r2)
        a = 2.0 ** (-relative_entropy(r1, r2) / 2)
        b = 2.0 ** (-dmax(r1, r2) / 2)
        t.check(f >= a - SLACK and a >= b - SLACK, {"case": i, "fact": "pinsker", "values": [f, a, b]})
        lam = float(rng.random())
        mix = lam * r1 + (1 - lam) * r2
        conc = von_neumann_entropy(mix) - lam * von_neumann_entropy(r1) - (1 - lam) * von_neumann_entropy(r2)
        t.check(conc >= -SLACK, {"case": i, "fact": "concavity", "value": conc})
        da, db, dc = (int(x) for x in rng.integers(2, 4, size=3))
        dim = HilbertDim(("A", "B", "C"), (da, db, dc))
        rho = random_density(dim.d, rng).matrix
        i_acb = cqmi(rho, ["A"], ["C"], ["B"], dim)
        t.check(-SLACK <= i_acb <= 2 * entropy_of(rho, ["C"], dim) + SLACK,
                {"case": i, "fact": "cqmi", "value": i_acb})
    return t.record()


def dmax_pure_identity(seed: int, n: int) -> dict:
    t = _Tally("dmax_pure_identity")
    for i in range(n):
        rng = rng_for(seed, 22, i)
        d = int(rng.integers(2, 17))
        sigma = random_density(d, rng).matrix
        psi = haar_pure_state(d, rng=rng)
        gap = abs(dmax(psi.density(), sigma) - dmax_pure(psi, sigma))
        t.check(gap <= 1e-9, {"case": i, "gap": gap})
    return t.record()


def closed_form_vs_oracle(seed: int, per_d: int) -> dict:
    t = _Tally("closed_form_vs_oracle")
    worst = 0.0
    for d in (3, 4, 5, 6):
        for i in range(per_d):
            rng = rng_for(seed, 23, d, i)
            q = random_projector(d, int(rng.integers(1, d)), rng)
            psi = haar_pure_state(d, rng=rng).vector
            nu = float(rng.uniform(1e-3, 0.3))
            gap = abs(smooth.smoothed_overlap_closed_form(psi, q, nu) - overlap_oracle_reduced(psi, q, nu))
            worst = max(worst, gap)
            t.check(gap <= 1e-5, {"d": d, "case": i, "gap": gap})
    return t.record(worst=worst)


def sandwich(seed: int, n: int) -> dict:
    t = _Tally("smooth_sandwich")
    for i in range(n):
        rng = rng_for(seed, 24, i)
        d = int(rng.integers(2, 9))
        psi = haar_pure_state(d, rng=rng)
        omega = random_density(d, rng).matrix
        nu = float(rng.uniform(1e-3, 0.2))
        lo = smooth.best_lower_bound(psi, omega, nu)
        up = smooth.smooth_dmax_upper_estimate(psi, omega, nu, seed=seed + i, n_random=2000)
        t.check(lo <= up + 1e-6, {"case": i, "lower": lo, "upper": up})
    return t.record()


def random_split_instance(rng: np.random.Generator, n: int, delta: float) -> splitsim.ConvexSplitInstance:
    """Qubit instance with p below 1 - delta and omega_i = p_i psi_i + (1 - p_i) sigma_i."""
    if n * (1 - delta) <= 1:
        raise ValueError(f"no distribution on {n} points has every p_i < 1 - delta = {1 - delta}")
    while True:
        p = rng.dirichlet(np.ones(n))
        if p.max() < 1 - delta and p.min() > 0:
            break
    psis, oms = [], []
    for i in range(n):
        psi = random_density(2, rng).matrix
        other = random_density(2, rng).matrix
        psis.append(psi)
        oms.append(p[i] * psi + (1 - p[i]) * other)
    return splitsim.ConvexSplitInstance(p / p.sum(), psis, oms, delta)


def convex_split(seed: int, reps: int) -> dict:
    t = _Tally("convex_split")
    for n in range(2, 7):
        for delta in (0.3, 0.5):
            if n * (1 - delta) <= 1:
                continue  # empty instance class
            for j in range(reps):
                rng = rng_for(seed, 25, n, int(delta * 10), j)
                res = splitsim.convex_split_build(random_split_instance(rng, n, delta))
                t.check(res.ok and res.n_ok, {"n": n, "delta": delta, "rep": j, **res.to_json()})
    return t.record()


def coding(limit: int) -> dict:
    t = _Tally("coding")
    bad = [n for n in range(2, limit + 1) if codec.elias_length(n) > codec.elias_length_bound(n)]
    t.check(not bad, {"elias_bound_violations": bad[:5]})
    words = [codec.elias_encode(n) for n in range(1, 2001)]
    ws = sorted(words)
    t.check(all(not b.startswith(a) for a, b in zip(ws, ws[1:])), {"prefix": "violation"})
    for delta in (0.1, 0.25, 0.5):
        code = codec.geometric_code(delta)
        el = codec.expected_length(code, delta, tail=1e-13)
        t.check(el <= 2 * math.log2(4 / delta), {"delta": delta, "expected_length": el})
        t.check(el <= codec.geometric_entropy(delta) + 1, {"delta": delta, "vs_entropy": el})
    return t.record()


def combinatorics(kmax: int) -> dict:
    t = _Tally("combinatorics")
    for r in (2, 3):
        for k in range(1, kmax + 1):
            t.check(splitsim.ordered_factorizations(k, r) == splitsim.ordered_factorizations_brute(k, r),
                    {"k": k, "r": r})
    for r in (2, 3, 5):
        for b in range(4, 21):
            v = splitsim.min_expected_log_product(b, r)
            t.check(v >= b / (2 * (math.log2(r) + 4)), {"b": b, "r": r, "value": v})
    for b in range(8, 21):
        v = splitsim.min_expected_log_product(b, 1)
        t.check(b - 1.45 <= v <= b - 1.40, {"b": b, "r": 1, "value": v})
    return t.record(nominal_r1_at_b3=splitsim.log_product_bounds(3, 1))


def hard_ensemble(seed: int, m: int) -> dict:
    t = _Tally("hard_ensemble")
    params = hardens.HardEnsembleParams(8, 0.25, m, 0.5, seed=seed)
    ens, rep = hardens.build_hard_ensemble(params)
    s, b, ok = hardens.entropy_bound_check(ens, 0.25, rep.eps_realized)
    t.check(ok, {"entropy": s, "bound": b})
    ov = np.abs(ens.vectors()[:, 0]) ** 2
    t.check(float(np.max(np.abs(ov - 0.75))) <= 1e-12, {"overlap_dev": float(np.max(np.abs(ov - 0.75)))})
    return t.record(report=rep.to_json(), entropy=s, bound=b)


def redistribution(seed: int) -> dict:
    t = _Tally("redistribution")
    for d in (2, 3, 4):
        for da in (1, 2):
            for mode in redist.BASIS_MODES:
                pair = redist.build_redist_pair(redist.RedistParams(d, da, 4.0, mode, seed))
                dev = redist.verify_rescaling(pair)
                q = redist.redist_quantities(pair)
                lg = math.log2(d)
                t.check(dev <= 1e-9, {"d": d, "d_a": da, "mode": mode, "deviation": dev})
                t.check(abs(q["i_r_bc_ghz"] - 2 * lg) <= 1e-9, {"d": d, "d_a": da, "i": q["i_r_bc_ghz"]})
                t.check(q["imax_rb_ub"] <= lg + 1e-9, {"d": d, "d_a": da, "imax": q["imax_rb_ub"]})
                t.check(q["cqmi_psi"] <= 2 * q["s_psi_c"] + 1e-9, {"d": d, "d_a": da, "cqmi": q["cqmi_psi"]})
    return t.record()


def arithmetic() -> dict:
    t = _Tally("arithmetic")
    w = redist.worst_case_redist_bound(2 ** 19, 0.1)
    t.check(abs(w["value"] - 5.15) <= 1e-9 and w["exceeds_one_sixth"], w)
    near = 1 / 6 - 1e-12
    t.check(abs(redist.worst_case_redist_bound(2 ** 20, near)["threshold_log2_d"] - 18.0) <= 1e-6, "threshold")
    par = redist.redistribution_parameters(0.5, 1e-16)
    t.check(abs(par["mu"] / 3.2e-3 - 1) <= 1e-6 and abs(par["beta"] / 4e12 - 1) <= 1e-6
            and par["eps_admissible"] and par["error_below_one_sixth"], par)
    t.check(not redist.redistribution_parameters(0.5, 1e-14)["eps_admissible"], "eps gate")
    cross = chansim.separation_crossover()
    t.check(cross["exists"] and cross["log2_d_star"] < 60, cross)
    return t.record(crossover=cross)


SUITE: dict[str, Callable[[int, float], dict]] = {
    "facts": lambda s, k: facts(s, max(10, int(100 * k))),
    "dmax_pure_identity": lambda s, k: dmax_pure_identity(s, max(10, int(100 * k))),
    "closed_form_vs_oracle": lambda s, k: closed_form_vs_oracle(s, max(3, int(10 * k))),
    "smooth_sandwich": lambda s, k: sandwich(s, max(5, int(30 * k))),
    "convex_split": lambda s, k: convex_split(s, max(1, int(2 * k))),
    "coding": lambda s, k: coding(max(1000, int(100_000 * k))),
    "combinatorics": lambda s, k: combinatorics(max(30, int(200 * k))),
    "hard_ensemble": lambda s, k: hard_ensemble(s, max(512, int(4096 * k))),
    "redistribution": lambda s, k: redistribution(s),
    "arithmetic": lambda s, k: arithmetic(),
}


def run_suite(seed: int, scale: float = 1.0, only: list[str] | None = None) -> dict:
    names = only or list(SUITE)
    unknown = [n for n in names if n not in SUITE]
    if unknown:
        raise KeyError(f"unknown properties: {unknown}")
    results = [SUITE[n](seed, scale) for n in names]
    return {
        "ok": all(r["ok"] for r in results),
        "properties": {r["name"]: r for r in results},
        "failed": [r["name"] for r in results if not r["ok"]],
    }
