import json
import math
import subprocess
import sys

import numpy as np
import pytest

from oqc import io as oio
from oqc.cli import main
from oqc.codec import read_transcript
from oqc.qcore import DensityOperator, Ensemble, HilbertDim, PureState, haar_pure_state, random_density, rng_for


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(path, obj):
    path.write_text(oio.dumps(obj))
    return str(path)


# --- io ---------------------------------------------------------------------------------

def test_state_round_trips():
    rng = rng_for(1)
    rho = random_density(6, rng)
    rho = DensityOperator(rho.matrix, HilbertDim.of(A=2, B=3))
    back = oio.operator_from_json(json.loads(oio.dumps(oio.operator_to_json(rho))))
    np.testing.assert_array_equal(back.matrix, rho.matrix)
    assert back.dim == rho.dim
    psi = haar_pure_state(4, rng=rng)
    np.testing.assert_array_equal(oio.pure_from_json(oio.pure_to_json(psi)).vector, psi.vector)
    ens = Ensemble([0.25, 0.75], (PureState.basis(2, 0), PureState.normalized([1, 1j])))
    back = oio.ensemble_from_json(json.loads(oio.dumps(oio.ensemble_to_json(ens))))
    np.testing.assert_array_equal(back.vectors(), ens.vectors())
    assert list(back.probs) == [0.25, 0.75]


def test_schema_errors():
    with pytest.raises(oio.SchemaError):
        oio.pure_from_json({"kind": "pure", "data": [1, 0]})
    with pytest.raises(oio.SchemaError):
        oio.ensemble_from_json({"kind": "density", "data": []})
    with pytest.raises(oio.SchemaError):
        oio.state_from_json({"inputs": {}, "results": {"value": 1.0}})
    with pytest.raises(oio.SchemaError):
        oio.state_from_json({"value": 1.0})


def test_clean_handles_nonfinite_and_numpy():
    text = oio.dumps({"a": math.inf, "b": float("nan"), "c": np.int64(3), "d": np.bool_(True), "e": np.arange(2)})
    assert json.loads(text) == {"a": "inf", "b": "nan", "c": 3, "d": True, "e": [0, 1]}


def test_load_malformed(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(oio.SchemaError):
        oio.load(p)


# --- CLI ---------------------------------------------------------------------------------

def test_envelope_and_determinism(capsys, tmp_path):
    argv = ["split", "simulate", "--trials", "2000", "--seed", "5"]
    code1, out1, _ = run(capsys, *argv)
    code2, out2, _ = run(capsys, *argv)
    assert code1 == code2 == 0
    assert out1 == out2
    doc = json.loads(out1)
    assert set(doc) == {"inputs", "seed", "version", "results"}
    assert doc["seed"] == 5
    assert abs(doc["results"]["mean_cost"] - doc["results"]["exact_mean"]) <= 5 * doc["results"]["stderr"]


def test_env_seed(capsys, monkeypatch):
    monkeypatch.setenv("OQC_SEED", "9")
    _, out, _ = run(capsys, "split", "simulate", "--trials", "100")
    assert json.loads(out)["seed"] == 9
    monkeypatch.setenv("OQC_SEED", "x")
    code, _, err = run(capsys, "split", "simulate", "--trials", "100")
    assert code == 1 and "OQC_SEED" in err


def test_usage_errors_exit_1(capsys):
    assert run(capsys, "nope")[0] == 1
    assert run(capsys, "smooth", "overlap")[0] == 1
    assert run(capsys, "split", "combinatorics")[0] == 1
    assert run(capsys)[0] == 1


def test_validation_error_exit_2(capsys, tmp_path):
    a = write(tmp_path / "a.json", oio.operator_to_json(DensityOperator(np.eye(2) / 2)))
    b = write(tmp_path / "b.json", oio.operator_to_json(DensityOperator(np.eye(3) / 3)))
    code, out, err = run(capsys, "measures", "fidelity", a, b)
    assert code == 2
    assert "dimension mismatch: 2 vs 3" in err
    assert out == ""


def test_measures(capsys, tmp_path):
    a = write(tmp_path / "a.json", oio.pure_to_json(PureState.basis(4, 0)))
    b = write(tmp_path / "b.json", oio.operator_to_json(DensityOperator(np.eye(4) / 4)))
    code, out, _ = run(capsys, "measures", "dmax", a, b)
    assert code == 0 and json.loads(out)["results"]["value"] == pytest.approx(2.0)
    code, out, _ = run(capsys, "measures", "entropy", b)
    assert json.loads(out)["results"]["value"] == pytest.approx(2.0)
    assert run(capsys, "measures", "entropy", a, b)[0] == 1


def test_ensemble_build_then_check_round_trip(capsys, tmp_path):
    out = tmp_path / "ens.json"
    code, _, _ = run(capsys, "ensemble", "build", "--d", "6", "--m", "800", "--eps", "1.0", "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["results"]["report"]["eps_realized"] <= 1.0
    code, text, _ = run(capsys, "ensemble", "check", str(out), "--eps", "1.0")
    assert code == 0
    again = json.loads(text)["results"]["report"]
    for key in ("norm1", "norm2", "norm3"):
        assert again[key] == pytest.approx(doc["results"]["report"][key], abs=1e-12)
    code, _, _ = run(capsys, "ensemble", "check", str(out), "--eps", "1e-6")
    assert code == 2


def test_hash_reference_to_artifact_entry(capsys, tmp_path):
    out = tmp_path / "pair.json"
    assert run(capsys, "redist", "build", "--d", "2", "--out", str(out))[0] == 0
    code, text, _ = run(capsys, "measures", "fidelity", f"{out}#psi", f"{out}#ghz")
    assert code == 0
    f = json.loads(text)["results"]["value"]
    assert 0 < f < 1


def test_split_validate_exit_codes(capsys, tmp_path):
    s = 1 / math.sqrt(2)
    ens = write(tmp_path / "e.json", oio.ensemble_to_json(Ensemble.uniform([[1, 0], [0, 1], [s, s]])))
    assert run(capsys, "split", "validate", ens)[0] == 0
    assert run(capsys, "split", "validate", ens, "--solution", "mixed")[0] == 0
    doc = {"r": 1, "eta": 0.1, "omega": [{"tuple": [1], "state": oio.operator_to_json(DensityOperator(np.diag([1.0, 0])))}],
           "entries": [{"x": x, "tuple": [1], "p": 1.0, "eps": 0.0,
                        "witness": oio.operator_to_json(DensityOperator(np.diag([1.0, 0])))} for x in range(3)]}
    sol = write(tmp_path / "sol.json", doc)
    code, out, _ = run(capsys, "split", "validate", ens, "--solution", sol)
    assert code == 2
    assert json.loads(out)["results"]["violations"]


def test_csv_and_transcript(capsys, tmp_path):
    tr = tmp_path / "t.bin"
    code, out, _ = run(capsys, "split", "simulate", "--trials", "50", "--format", "csv",
                       "--solution", "mixed", "--dump-transcript", str(tr))
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("x,branch,k,tuple")
    assert len(lines) == 51
    msgs = read_transcript(open(tr, "rb"))
    assert len(msgs) == 50
    assert [len(m) for m in msgs] == [int(l.rsplit(",", 1)[1]) for l in lines[1:]]


def test_redist_and_channel_commands(capsys):
    code, out, _ = run(capsys, "redist", "verify", "--d", "3", "--d-a", "2", "--mode", "random_C")
    assert code == 0 and json.loads(out)["results"]["ok"]
    code, out, _ = run(capsys, "redist", "params", "--p", "0.5", "--d", "524288", "--delta", "0.1")
    res = json.loads(out)["results"]
    assert res["parameters"]["eps_admissible"] and res["worst_case"]["exceeds_one_sixth"]
    code, out, _ = run(capsys, "channel", "sim-lower", "--mode", "rounds", "--r", "2")
    assert code == 0 and json.loads(out)["results"]["crossover"]["exists"]
    code, out, _ = run(capsys, "channel", "upper", "--C", "3", "--eta", "0.5")
    assert json.loads(out)["results"]["value"] == pytest.approx(8.0)


def test_verify_all_subset(capsys):
    code, out, _ = run(capsys, "verify-all", "--scale", "0.1", "--only", "coding,arithmetic,redistribution")
    assert code == 0
    assert json.loads(out)["results"]["failed"] == []
    code, _, err = run(capsys, "verify-all", "--only", "bogus")
    assert code == 2 and "unknown properties" in err


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "oqc.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("oqc ")
    proc = subprocess.run([sys.executable, "-m", "oqc.cli", "split", "combinatorics", "--k", "12", "--r", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["ordered_factorizations"] == 6


def test_verify_all_full_suite(capsys):
    code, out, _ = run(capsys, "verify-all", "--scale", "0.2")
    assert code == 0
    res = json.loads(out)["results"]
    assert res["failed"] == [] and res["ok"]
    for prop in res["properties"].values():
        assert prop["passed"] == prop["total"] > 0
