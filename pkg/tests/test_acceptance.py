"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line with
its wall time against the limit. Run with ``pytest tests/test_acceptance.py -v``."""
import math
import time

import numpy as np

from oqc import chansim, codec, hardens, properties, redist, smooth, splitsim
from oqc.oracles import overlap_oracle_reduced, overlap_oracle_search, random_projector
from oqc.qcore import Ensemble, dmax, dmax_pure, haar_pure_state, random_density, rng_for

SEED = 20240601


class Criterion:
    def __init__(self, capsys, number, title, limit):
        self.capsys, self.number, self.title, self.limit = capsys, number, title, limit
        self.failures = []
        self.t0 = time.perf_counter()

    def check(self, ok, info):
        if not ok:
            self.failures.append(info)

    def finish(self, detail=""):
        elapsed = time.perf_counter() - self.t0
        in_time = elapsed <= self.limit
        ok = not self.failures and in_time
        status = "PASS" if ok else "FAIL"
        line = f"[criterion {self.number:2d}] {status} {self.title} ({elapsed:.2f}s / {self.limit:g}s) {detail}"
        with self.capsys.disabled():
            print("\n" + line.rstrip())
        assert not self.failures, self.failures[:5]
        assert in_time, f"took {elapsed:.1f}s, limit {self.limit}s"


def test_criterion_01_closed_form_vs_oracles(capsys):
    c = Criterion(capsys, 1, "closed form vs brute-force overlap minimum, 400 cases", 120)
    worst_red = worst_search = 0.0
    for d in (3, 4, 5, 6):
        for i in range(100):
            rng = rng_for(SEED, 1, d, i)
            q = random_projector(d, int(rng.integers(1, d)), rng)
            psi = haar_pure_state(d, rng=rng).vector
            nu = float(rng.uniform(1e-3, 0.3))
            cf = smooth.smoothed_overlap_closed_form(psi, q, nu)
            g1 = abs(cf - overlap_oracle_reduced(psi, q, nu))
            g2 = abs(cf - overlap_oracle_search(psi, q, nu, seed=i))
            worst_red, worst_search = max(worst_red, g1), max(worst_search, g2)
            c.check(g1 <= 1e-5 and g2 <= 1e-5, {"d": d, "case": i, "reduced": g1, "search": g2})
    c.finish(f"worst gap reduced={worst_red:.2e} search={worst_search:.2e}")


def test_criterion_02_convex_split(capsys):
    c = Criterion(capsys, 2, "convex split certificate, |I| <= 6, qubit C", 60)
    count, worst = 0, -math.inf
    for n in range(1, 7):
        for delta in (0.3, 0.5):
            if n * (1 - delta) <= 1:
                continue  # no distribution on n points has every p_i < 1 - delta
            for rep in range(10):
                inst = properties.random_split_instance(rng_for(SEED, 2, n, int(delta * 10), rep), n, delta)
                res = splitsim.convex_split_build(inst)
                count += 1
                worst = max(worst, res.dmax_tau - res.bound)
                c.check(res.dmax_tau <= res.bound + 1e-9, {"n": n, "delta": delta, "dmax": res.dmax_tau})
                c.check(res.n_ok, {"n": n, "delta": delta, "N": res.N})
                c.check(res.q_ratio_max <= 1 + 1e-9, {"n": n, "delta": delta, "q_ratio": res.q_ratio_max})
    c.finish(f"{count} instances, largest Dmax - bound = {worst:.3f}")


def test_criterion_03_protocol_cost(capsys):
    c = Criterion(capsys, 3, "protocol cost bound on the 4-state ensemble, 1e5 trials", 60)
    s = 1 / math.sqrt(2)
    ens = Ensemble.uniform([[1, 0], [0, 1], [s, s], [s, -s]])
    delta = 0.25
    parts = []
    for name, sol in (("baseline", splitsim.baseline_solution(ens)),
                      ("mixed", splitsim.maximally_mixed_solution(ens))):
        val = splitsim.validate_feasible_solution(ens, sol)
        c.check(val.ok, {name: val.violations})
        res = splitsim.simulate_one_way_protocol(ens, sol, delta, 100_000, seed=SEED)
        bound = splitsim.achievability_bound(val.objective, sol.r, delta)
        c.check(res.mean_cost <= bound + 3 * res.stderr, {name: (res.mean_cost, bound)})
        c.check(abs(res.mean_cost - res.exact_mean) <= 3 * res.stderr,
                {name: (res.mean_cost, res.exact_mean, res.stderr)})
        parts.append(f"{name}: mean {res.mean_cost:.4f} exact {res.exact_mean:.4f} bound {bound:.2f}")
    c.finish("; ".join(parts))


def test_criterion_04_coding(capsys):
    c = Criterion(capsys, 4, "Elias code to 1e6 and geometric code length", 60)
    words = [codec.elias_encode(n) for n in range(1, 1_000_001)]
    bad_len = [n for n, w in enumerate(words[1:], start=2) if len(w) > codec.elias_length_bound(n)]
    c.check(not bad_len, {"length_bound": bad_len[:5]})
    words.sort()
    clash = next((a for a, b in zip(words, words[1:]) if b.startswith(a)), None)
    c.check(clash is None, {"prefix": clash})
    lens = []
    for delta in (0.1, 0.25, 0.5):
        code = codec.geometric_code(delta)
        el = codec.expected_length(code, delta, tail=1e-12)
        tail = codec.expected_length_closed_form(code, delta) - el
        c.check(0 <= tail < 1e-12, {"delta": delta, "tail": tail})
        c.check(el <= 2 * math.log2(4 / delta), {"delta": delta, "expected_length": el})
        lens.append(f"{el:.3f}<={2 * math.log2(4 / delta):.3f}")
    c.finish("geometric " + " ".join(lens))


def test_criterion_05_combinatorics(capsys):
    c = Criterion(capsys, 5, "ordered factorisations and the log-product minimum", 60)
    for r in (2, 3):
        for k in range(1, 201):
            c.check(splitsim.ordered_factorizations(k, r) == splitsim.ordered_factorizations_brute(k, r),
                    {"k": k, "r": r})
    for r in (2, 3, 5):
        for b in range(4, 21):
            v = splitsim.min_expected_log_product(b, r)
            c.check(v >= b / (2 * (math.log2(r) + 4)), {"b": b, "r": r, "value": v})
    for b in range(8, 21):
        v = splitsim.min_expected_log_product(b, 1)
        c.check(b - 1.45 <= v <= b - 1.40, {"b": b, "value": v})
    at3 = splitsim.log_product_bounds(3, 1)
    c.check(abs(at3["value"] - 1.9124) <= 1e-4 and not at3["nominal_holds"], at3)
    c.finish(f"b - 1 violated at b = 3: value {at3['value']:.4f} < 2")


def test_criterion_06_hard_ensemble(capsys):
    c = Criterion(capsys, 6, "hard ensemble entropy bound and 1/sqrt(m) concentration", 180)
    delta = 0.25
    ens, rep = hardens.build_hard_ensemble(hardens.HardEnsembleParams(8, delta, 4096, 0.5, seed=SEED))
    s, b, ok = hardens.entropy_bound_check(ens, delta, rep.eps_realized)
    c.check(ok, {"entropy": s, "bound": b})
    ms = (100, 1000, 10_000)
    norms = []
    for m in ms:
        r = hardens.concentration_check(hardens.sample_batch(8, m, SEED), delta, 1.0)
        norms.append((r.norm1, r.norm2, r.norm3))
    norms = np.array(norms)
    slopes = [float(np.polyfit(np.log10(ms), np.log10(norms[:, j]), 1)[0]) for j in range(3)]
    for j, sl in enumerate(slopes):
        c.check(abs(sl + 0.5) <= 0.15, {"norm": j + 1, "slope": sl})
    c.finish(f"S={s:.4f} <= {b:.4f} (eps {rep.eps_realized:.3f}); slopes {np.round(slopes, 3).tolist()}")


def test_criterion_07_smooth_sandwich(capsys):
    c = Criterion(capsys, 7, "smoothed D_max lower <= upper, pure-state identity", 120)
    for i in range(200):
        rng = rng_for(SEED, 7, i)
        d = int(rng.integers(2, 9))
        psi = haar_pure_state(d, rng=rng)
        omega = random_density(d, rng).matrix
        nu = float(rng.uniform(1e-3, 0.2))
        lo = smooth.best_lower_bound(psi, omega, nu)
        up = smooth.smooth_dmax_upper_estimate(psi, omega, nu, seed=i, n_random=2000)
        c.check(lo <= up + 1e-6, {"case": i, "lower": lo, "upper": up})
    worst = 0.0
    for i in range(200):
        rng = rng_for(SEED, 77, i)
        d = int(rng.integers(2, 17))
        sigma = random_density(d, rng).matrix
        psi = haar_pure_state(d, rng=rng)
        gap = abs(dmax(psi.density(), sigma) - dmax_pure(psi, sigma))
        worst = max(worst, gap)
        c.check(gap <= 1e-9, {"case": i, "gap": gap})
    c.finish(f"identity worst gap {worst:.1e}")


def test_criterion_08_redistribution(capsys):
    c = Criterion(capsys, 8, "redistribution identity, quantities and threshold arithmetic", 120)
    combos = [(d, da, mode) for d in (2, 3, 4) for da in (1, 2) for mode in redist.BASIS_MODES]
    worst = 0.0
    for i in range(20):
        d, da, mode = combos[i % len(combos)]
        pair = redist.build_redist_pair(redist.RedistParams(d, da, 4.0, mode, seed=SEED + i))
        dev = redist.verify_rescaling(pair)
        worst = max(worst, dev)
        q = redist.redist_quantities(pair)
        lg = math.log2(d)
        c.check(dev <= 1e-9, {"i": i, "deviation": dev})
        c.check(abs(q["i_r_bc_ghz"] - 2 * lg) <= 1e-9, {"i": i, "I": q["i_r_bc_ghz"]})
        c.check(q["imax_rb_ub"] <= lg + 1e-9, {"i": i, "imax": q["imax_rb_ub"]})
        c.check(q["cqmi_psi"] <= 2 * q["s_psi_c"] + 1e-9, {"i": i, "cqmi": q["cqmi_psi"]})
    w = redist.worst_case_redist_bound(2 ** 19, 0.1)
    c.check(w["value"] == 0.35 * 19 - 1.5 and w["exceeds_one_sixth"], w)
    # the per-delta threshold rises to log2 d = 18 as delta -> 1/6, so d > 2^18 works for every delta
    near = 1 / 6 - 1e-12
    at18 = redist.worst_case_redist_bound(2 ** 18, near)
    c.check(abs(at18["threshold_log2_d"] - 18) <= 1e-9, at18)
    c.check(abs(at18["value"] - at18["one_sixth_log_d"]) <= 1e-9, at18)
    c.check(not redist.worst_case_redist_bound(2 ** 17.99, near)["exceeds_one_sixth"], "below 2^18")
    grid = np.linspace(1e-3, 1 / 6 - 1e-9, 200)
    c.check(all(redist.worst_case_redist_bound(2 ** 18.001, dl)["exceeds_one_sixth"] for dl in grid), "uniform")
    c.check(redist.worst_case_redist_bound(2 ** 19, 0.1)["uniform_condition_met"], "uniform condition")
    c.finish(f"worst deviation {worst:.1e}")


def test_criterion_09_parameter_arithmetic(capsys):
    c = Criterion(capsys, 9, "parameter calculators and separation crossover", 1.0)
    rel = lambda a, b: abs(a / b - 1) <= 1e-6
    par = redist.redistribution_parameters(0.5, 1e-16)
    c.check(rel(par["mu"], 3.2e-3) and rel(par["beta"], 4.0e12), par)
    c.check(rel(par["error_bound"], 8 * math.sqrt(2) * 1e-2) and par["error_below_one_sixth"], par)
    c.check(rel(par["eps_max"], 70.0 ** -8) and par["eps_admissible"], par)
    c.check(not redist.redistribution_parameters(0.5, 1e-14)["eps_admissible"], "eps gate")
    c.check(rel(redist.redistribution_parameters(1e-12, 1e-9)["eps_max"], 70.0 ** -4), "p -> 0")
    # eta = 1e-4 is above (delta/8)^2 = 2^-16 here, so the value comes with a failed gate
    one = chansim.simulation_cost_lower(2.0 ** 40, 2.0 ** -5, 1e-4, "oneway")
    c.check(rel(one["value"], 0.9801 * 28) and not one["admissible"], one)
    c.check(chansim.simulation_cost_lower(2.0 ** 40, 2.0 ** -5, 1e-5, "oneway")["admissible"], "gate")
    rounds = chansim.simulation_cost_lower(2.0 ** 40, 2.0 ** -5, 1e-4, "rounds", r=2)
    c.check(rel(rounds["value"], 1.4), rounds)
    c.check(chansim.simulation_cost_lower(2.0 ** 10, 2.0 ** -5, 1e-4, "oneway")["value"] == 0.0, "floor")
    c.check(abs(chansim.one_shot_capacity_upper(1.0, 0.01) - 1.0917) <= 1e-4, "one-shot")
    c.check(rel(chansim.one_shot_capacity_upper(0.0, 0.5), 2.0), "one-shot half")
    try:
        chansim.simulation_cost_lower(2.0 ** 40, 2.0 ** -5, 0.5, "oneway", strict=True)
        c.check(False, "gate did not fire")
    except chansim.GateFailure:
        pass
    cross = chansim.separation_crossover()
    c.check(cross["exists"] and cross["log2_d_star"] < 60, cross)
    c.finish(f"crossover log2 d* = {cross['log2_d_star']:.4f}")


def test_criterion_10_fact_suite(capsys):
    c = Criterion(capsys, 10, "triangle, Pinsker chain, concavity, cqmi on 500 instances", 60)
    rec = properties.facts(SEED, 500)
    c.check(rec["ok"] and rec["total"] == 2000, rec["failures"])
    c.finish(f"{rec['passed']}/{rec['total']} checks")
