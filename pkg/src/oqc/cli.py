"""``oqc`` command line: build and check ensembles, evaluate measures and bounds, run
the protocol simulation, and run the invariant suite.

Every command prints (or writes to --out) one JSON document
{inputs, seed, version, results} with sorted keys, so equal inputs give equal bytes.
Exit codes: 0 ok, 1 usage, 2 validation failure, 3 property failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from pathlib import Path

from . import __version__, chansim, codec, hardens, properties, redist, smooth, splitsim
from . import io as oio
from .qcore import (
    Ensemble,
    InvalidState,
    PureState,
    cqmi,
    dmax,
    fidelity,
    rng_for,
    von_neumann_entropy,
)

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_PROPERTY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get("OQC_SEED")
    if raw is None:
        return 0
    try:
        return int(raw, 0)
    except ValueError:
        raise UsageError(f"OQC_SEED must be an integer, got {raw!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                   help="64-bit seed (default: $OQC_SEED or 0)")
    p.add_argument("--out", type=Path, default=None, help="write the JSON artifact here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="csv emits per-record rows where a command has them")
    return p


def _regs(s: str) -> list[str]:
    return [x for x in s.split(",") if x]


def _load_state(ref: str):
    return oio.load_state(ref)


def _load_ensemble(path: str) -> Ensemble:
    st = _load_state(path)
    if not isinstance(st, Ensemble):
        raise InvalidState(f"{path} does not hold an ensemble")
    return st


def _matrix(st):
    if isinstance(st, PureState):
        return st.density()
    if isinstance(st, Ensemble):
        return st.average()
    return st


# --- commands -------------------------------------------------------------------------------

def cmd_ensemble_build(a, seed):
    params = hardens.HardEnsembleParams(a.d, a.delta, a.m, a.eps, seed=seed)
    ens, rep = hardens.build_hard_ensemble(params, max_retries=a.retries, convention=a.convention)
    s, b, ok = hardens.entropy_bound_check(ens, a.delta, rep.eps_realized)
    inputs = {"d": a.d, "delta": a.delta, "m": a.m, "eps": a.eps, "convention": a.convention}
    return inputs, {"report": rep.to_json(), "entropy": {"value": s, "bound": b, "ok": ok},
                    "ensemble": oio.ensemble_to_json(ens)}, EXIT_OK


def cmd_ensemble_check(a, seed):
    ens = _load_ensemble(a.file)
    xs = hardens.embedded_samples(ens, a.delta)
    rep = hardens.concentration_check(xs, a.delta, a.eps, a.convention)
    s, b, ok = hardens.entropy_bound_check(ens, a.delta, rep.eps_realized)
    code = EXIT_OK if rep.ok and ok else EXIT_INVALID
    return ({"file": a.file, "delta": a.delta, "eps": a.eps},
            {"report": rep.to_json(), "entropy": {"value": s, "bound": b, "ok": ok}}, code)


def cmd_measures(a, seed):
    states = [_load_state(f) for f in a.files]
    kind = a.measure
    need = {"dmax": 2, "fidelity": 2, "entropy": 1, "cqmi": 1}[kind]
    if len(states) != need:
        raise UsageError(f"measures {kind} takes {need} state file(s)")
    if kind == "dmax":
        val = dmax(_matrix(states[0]), _matrix(states[1]))
    elif kind == "fidelity":
        val = fidelity(_matrix(states[0]), _matrix(states[1]))
    elif kind == "entropy":
        val = von_neumann_entropy(_matrix(states[0]))
    else:
        if not (a.a and a.b and a.c):
            raise UsageError("cqmi needs --a, --b and --c register lists")
        st = _matrix(states[0])
        val = cqmi(st, _regs(a.a), _regs(a.c), _regs(a.b), st.dim)
    return {"measure": kind, "files": a.files, "a": a.a, "b": a.b, "c": a.c}, {"value": val}, EXIT_OK


def cmd_smooth_overlap(a, seed):
    psi = _load_state(a.psi)
    if not isinstance(psi, PureState):
        raise InvalidState("psi must be a pure state")
    omega = _matrix(_load_state(a.omega)).matrix
    nu = a.nu
    pair = smooth.split_projectors(omega, a.k)
    res = {
        "overlap_closed_form": smooth.smoothed_overlap_closed_form(psi, pair.Qminus, nu),
        "lower_bound": smooth.smooth_dmax_lower_bound(psi, omega, nu, a.k),
        "best_lower_bound": smooth.best_lower_bound(psi, omega, nu),
        "exact": smooth.smooth_dmax_pure(psi, omega, nu),
        "upper_estimate": smooth.smooth_dmax_upper_estimate(psi, omega, nu, seed=seed),
        "rank_minus": pair.rank_minus,
    }
    return {"psi": a.psi, "omega": a.omega, "nu": nu, "k": a.k}, res, EXIT_OK


def cmd_smooth_qstar(a, seed):
    ens = _load_ensemble(a.file)
    q = smooth.q_star(ens, a.nu, seed=seed)
    return {"file": a.file, "nu": a.nu}, q.to_json(), EXIT_OK


def cmd_smooth_avg(a, seed):
    ens = _load_ensemble(a.file)
    omega = ens.average() if a.omega is None else _matrix(_load_state(a.omega))
    res = smooth.ensemble_avg_2pow_neg_dmax_bound(ens, omega, a.nu, a.delta, a.k)
    return {"file": a.file, "omega": a.omega or "average", "nu": a.nu, "delta": a.delta, "k": a.k}, \
        res.to_json(), EXIT_OK


def _solution(a, ens):
    if a.solution in (None, "baseline"):
        return splitsim.baseline_solution(ens, a.r, a.eta)
    if a.solution == "mixed":
        return splitsim.maximally_mixed_solution(ens, a.r, a.eta)
    data = oio.load(a.solution)
    return splitsim.FeasibleSolution.from_json(data.get("results", {}).get("solution", data))


def cmd_split_validate(a, seed):
    ens = _load_ensemble(a.file)
    sol = _solution(a, ens)
    v = splitsim.validate_feasible_solution(ens, sol)
    return ({"file": a.file, "solution": a.solution or "baseline"}, v.to_json(),
            EXIT_OK if v.ok else EXIT_INVALID)


def _demo_ensemble() -> Ensemble:
    s = 1 / math.sqrt(2)
    return Ensemble.uniform([[1, 0], [0, 1], [s, s], [s, -s]])


def cmd_split_simulate(a, seed):
    ens = _load_ensemble(a.file) if a.file else _demo_ensemble()
    sol = _solution(a, ens)
    val = splitsim.validate_feasible_solution(ens, sol)
    if not val.ok:
        return {"file": a.file}, val.to_json(), EXIT_INVALID
    keep = a.format == "csv" or a.dump_transcript is not None
    res = splitsim.simulate_one_way_protocol(ens, sol, a.delta, a.trials, seed=seed, keep_records=keep,
                                             check=False)
    if a.dump_transcript is not None:
        gcode = codec.geometric_code(a.delta)
        with open(a.dump_transcript, "wb") as fh:
            codec.write_transcript(fh, (r.message(gcode) for r in res.records))
    inputs = {"file": a.file or "demo:4-state", "solution": a.solution or "baseline", "delta": a.delta,
              "trials": a.trials, "r": a.r}
    out = res.to_json()
    out["objective"] = val.objective
    if a.format == "csv":
        return inputs, {"_csv": [r.to_row() for r in res.records], **out}, EXIT_OK
    return inputs, out, EXIT_OK


def cmd_split_convex(a, seed):
    rng = rng_for(seed, 30)
    inst = properties.random_split_instance(rng, a.n, a.delta)
    res = splitsim.convex_split_build(inst)
    return {"n": a.n, "delta": a.delta}, res.to_json(), EXIT_OK if res.ok and res.n_ok else EXIT_INVALID


def cmd_split_comb(a, seed):
    out = {}
    if a.k is not None:
        out["ordered_factorizations"] = splitsim.ordered_factorizations(a.k, a.r)
    if a.b is not None:
        out["bounds"] = splitsim.log_product_bounds(a.b, a.r)
    if a.q_star is not None:
        out["simple_lower_bound"] = splitsim.simple_lower_bound(a.q_star, a.gamma, a.r)
    if not out:
        raise UsageError("combinatorics needs --k, --b or --q-star")
    return {"k": a.k, "b": a.b, "r": a.r, "q_star": a.q_star, "gamma": a.gamma}, out, EXIT_OK


def _redist_params(a, seed):
    return redist.RedistParams(a.d, a.d_a, a.beta, a.mode or "fixed_C", seed)


def cmd_redist_build(a, seed):
    p = _redist_params(a, seed)
    pair = redist.build_redist_pair(p)
    return p.to_json(), {"psi": oio.pure_to_json(pair.psi), "ghz": oio.pure_to_json(pair.ghz),
                         "spectrum": pair.spectrum.tolist(),
                         "spectrum_entropy": redist.spectrum_entropy_report(p.d, p.beta)}, EXIT_OK


def cmd_redist_verify(a, seed):
    p = _redist_params(a, seed)
    pair = redist.build_redist_pair(p)
    dev = redist.verify_rescaling(pair)
    return p.to_json(), {"deviation": dev, "ok": dev <= 1e-9}, EXIT_OK if dev <= 1e-9 else EXIT_INVALID


def cmd_redist_quantities(a, seed):
    p = _redist_params(a, seed)
    return p.to_json(), redist.redist_quantities(redist.build_redist_pair(p)), EXIT_OK


def cmd_redist_params(a, seed):
    out = {}
    if a.p is not None:
        out["parameters"] = redist.redistribution_parameters(a.p, a.eps)
    if a.delta is not None and a.d is not None:
        out["worst_case"] = redist.worst_case_redist_bound(a.d, a.delta)
    if not out:
        raise UsageError("params needs --p/--eps or --d/--delta")
    return {"p": a.p, "eps": a.eps, "d": a.d, "delta": a.delta}, out, EXIT_OK


def cmd_channel_capacity(a, seed):
    if a.file:
        ens = _load_ensemble(a.file)
        inputs = {"file": a.file}
    else:
        params = hardens.HardEnsembleParams(a.d, a.delta, a.m, a.eps, seed=seed)
        ens, _ = hardens.build_hard_ensemble(params)
        inputs = {"d": a.d, "delta": a.delta, "m": a.m, "eps": a.eps}
    res = chansim.cq_capacity(chansim.CqChannel.from_ensemble(ens))
    res.pop("input_distribution")
    return inputs, res, EXIT_OK


def cmd_channel_upper(a, seed):
    return {"C": a.C, "eta": a.eta}, {"value": chansim.one_shot_capacity_upper(a.C, a.eta)}, EXIT_OK


def cmd_channel_sim_lower(a, seed):
    mode = a.mode or "oneway"
    rec = chansim.simulation_cost_lower(a.d, a.delta, a.eta, mode, r=a.r)
    rec["crossover"] = chansim.separation_crossover()
    return {"d": a.d, "delta": a.delta, "eta": a.eta, "mode": mode, "r": a.r}, rec, EXIT_OK


def cmd_verify_all(a, seed):
    res = properties.run_suite(seed, a.scale, _regs(a.only) if a.only else None)
    for rec in res["properties"].values():
        rec.pop("seconds", None)
    summary = {name: {"passed": r["passed"], "total": r["total"]} for name, r in res["properties"].items()}
    return {"scale": a.scale, "only": a.only}, {**res, "summary": summary}, EXIT_OK if res["ok"] else EXIT_PROPERTY


# --- parser ---------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _common()
    top = _Parser(prog="oqc", description=__doc__.splitlines()[0])
    top.add_argument("--version", action="version", version=f"oqc {__version__}")
    groups = top.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def leaf(sub, name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(fn=fn)
        return p

    g = groups.add_parser("ensemble", help="hard ensemble construction").add_subparsers(dest="action", required=True)
    p = leaf(g, "build", cmd_ensemble_build, "sample and certify a hard ensemble")
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--m", type=int, default=4096)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--retries", type=int, default=10)
    p.add_argument("--convention", choices=hardens.CONVENTIONS, default="haar")
    p = leaf(g, "check", cmd_ensemble_check, "re-run the certificates on an ensemble file")
    p.add_argument("file")
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--convention", choices=hardens.CONVENTIONS, default="haar")

    p = leaf(groups, "measures", cmd_measures, "information measures on JSON states")
    p.add_argument("measure", choices=("dmax", "entropy", "fidelity", "cqmi"))
    p.add_argument("files", nargs="+")
    p.add_argument("--a", default=None, help="comma-separated registers")
    p.add_argument("--b", default=None)
    p.add_argument("--c", default=None)

    g = groups.add_parser("smooth", help="smoothed max-relative entropy bounds").add_subparsers(dest="action", required=True)
    p = leaf(g, "overlap", cmd_smooth_overlap, "closed form, bounds and exact value for one state")
    p.add_argument("psi")
    p.add_argument("omega")
    p.add_argument("--nu", type=float, default=0.01)
    p.add_argument("--k", type=float, default=2.0)
    p = leaf(g, "qstar", cmd_smooth_qstar, "Q* estimate for an ensemble")
    p.add_argument("file")
    p.add_argument("--nu", type=float, default=0.01)
    p = leaf(g, "avg-bound", cmd_smooth_avg, "certified bound on E 2^-Dmax")
    p.add_argument("file")
    p.add_argument("--omega", default=None, help="state file (default: the ensemble average)")
    p.add_argument("--nu", type=float, default=0.01)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--k", type=float, default=None)

    g = groups.add_parser("split", help="state splitting").add_subparsers(dest="action", required=True)
    for name, fn, help_ in (("validate", cmd_split_validate, "check a feasible solution"),
                            ("simulate", cmd_split_simulate, "Monte Carlo of the one-way protocol")):
        p = leaf(g, name, fn, help_)
        p.add_argument("file", nargs="?" if name == "simulate" else None, default=None)
        p.add_argument("--solution", default=None, help="baseline, mixed, or a solution JSON file")
        p.add_argument("--r", type=int, default=1)
        p.add_argument("--eta", type=float, default=0.1)
        if name == "simulate":
            p.add_argument("--delta", type=float, default=0.25)
            p.add_argument("--trials", type=int, default=100_000)
            p.add_argument("--dump-transcript", type=Path, default=None)
    p = leaf(g, "convex-split", cmd_split_convex, "build and certify a random convex split")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--delta", type=float, default=0.3)
    p = leaf(g, "combinatorics", cmd_split_comb, "ordered factorisations and the simple lower bound")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--q-star", type=float, default=None)
    p.add_argument("--gamma", type=float, default=0.5)

    g = groups.add_parser("redist", help="redistribution states").add_subparsers(dest="action", required=True)
    for name, fn, help_ in (("build", cmd_redist_build, "build the state pair"),
                            ("verify", cmd_redist_verify, "check the rescaling identity"),
                            ("quantities", cmd_redist_quantities, "entropic quantities")):
        p = leaf(g, name, fn, help_)
        p.add_argument("--d", type=int, default=2)
        p.add_argument("--d-a", type=int, default=1)
        p.add_argument("--beta", type=float, default=4.0)
        p.add_argument("--mode", choices=redist.BASIS_MODES, default=None)
    p = leaf(g, "params", cmd_redist_params, "parameter arithmetic")
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--eps", type=float, default=1e-16)
    p.add_argument("--d", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)

    g = groups.add_parser("channel", help="cq channel bounds").add_subparsers(dest="action", required=True)
    p = leaf(g, "capacity", cmd_channel_capacity, "Holevo capacity of a cq channel")
    p.add_argument("file", nargs="?", default=None)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--m", type=int, default=4096)
    p.add_argument("--eps", type=float, default=0.5)
    p = leaf(g, "upper", cmd_channel_upper, "one-shot capacity upper bound")
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--eta", type=float, default=0.01)
    p = leaf(g, "sim-lower", cmd_channel_sim_lower, "simulation cost lower bound")
    p.add_argument("--d", type=float, default=2.0 ** 40)
    p.add_argument("--delta", type=float, default=2.0 ** -5)
    p.add_argument("--eta", type=float, default=1e-4)
    p.add_argument("--mode", choices=chansim.MODES, default=None)
    p.add_argument("--r", type=int, default=None)

    p = leaf(groups, "verify-all", cmd_verify_all, "run the invariant suite")
    p.add_argument("--scale", type=float, default=1.0, help="multiplier on case counts")
    p.add_argument("--only", default=None, help="comma-separated property names")
    return top


def _emit(doc: dict, a) -> None:
    rows = doc["results"].pop("_csv", None)
    if a.format == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["x"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = oio.dumps(doc)
    if a.out is not None:
        a.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        seed = a.seed if a.seed is not None else _default_seed()
        inputs, results, code = a.fn(a, seed)
    except UsageError as exc:
        print(f"oqc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, OSError, hardens.ConstructionFailed) as exc:
        msg = str(exc).strip("'\"")
        print(f"oqc: error: {msg}", file=sys.stderr)
        doc = {"inputs": {"argv": list(argv) if argv is not None else sys.argv[1:]}, "seed": None,
               "version": __version__, "results": {"error": msg, "type": type(exc).__name__}}
        if a.out is not None:
            a.out.write_text(oio.dumps(doc), encoding="utf-8")
        return EXIT_INVALID
    doc = {"inputs": inputs, "seed": seed, "version": __version__, "results": results}
    _emit(doc, a)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
