import math

import numpy as np
import pytest

from oqc import hardens
from oqc.chansim import (
    CqChannel,
    GateFailure,
    capacity_bound,
    cq_capacity,
    one_shot_capacity_upper,
    output_entropy,
    separation_crossover,
    separation_gap,
    simulation_cost_lower,
)
from oqc.qcore import Ensemble, PureState, binary_entropy, rng_for

S = 1 / math.sqrt(2)


def test_channel_validation():
    with pytest.raises(ValueError):
        CqChannel(())
    with pytest.raises(ValueError):
        CqChannel((PureState.basis(2, 0), PureState.basis(3, 0)))


def test_capacity_orthogonal_outputs():
    ch = CqChannel(tuple(PureState.basis(4, i) for i in range(4)))
    cap = cq_capacity(ch)
    assert cap["capacity"] == pytest.approx(2.0, abs=1e-9)
    assert cap["uniform_is_maximizer"]


def test_capacity_two_nonorthogonal_states():
    # two pure states with overlap c: capacity h((1 + c)/2), uniform input optimal
    c = math.cos(0.3)
    ch = CqChannel((PureState.basis(2, 0), PureState.normalized([c, math.sqrt(1 - c * c)])))
    cap = cq_capacity(ch)
    assert cap["capacity"] == pytest.approx(binary_entropy((1 + c) / 2), abs=1e-8)
    assert cap["upper"] - cap["capacity"] <= 1e-9


def test_capacity_single_output():
    assert cq_capacity(CqChannel((PureState.basis(2, 0),)))["capacity"] == 0.0


def test_capacity_beats_random_inputs():
    ch = CqChannel((PureState.basis(2, 0), PureState.basis(2, 1), PureState.normalized([S, S])))
    cap = cq_capacity(ch)
    assert cap["capacity"] > cap["uniform_entropy"]
    assert not cap["uniform_is_maximizer"]
    rng = rng_for(0)
    for _ in range(200):
        p = rng.dirichlet(np.ones(3))
        assert output_entropy(ch, p) <= cap["upper"] + 1e-9


def test_hard_channel_capacity_below_bound():
    delta = 0.25
    ens, rep = hardens.build_hard_ensemble(hardens.HardEnsembleParams(8, delta, 400, 2.0, seed=1))
    cap = cq_capacity(CqChannel.from_ensemble(ens))
    assert cap["upper"] <= capacity_bound(8, delta, rep.eps_realized)


def test_capacity_bound_and_one_shot():
    assert capacity_bound(2 ** 10, 0.25) == pytest.approx(2.5 + binary_entropy(0.25) + 2)
    assert one_shot_capacity_upper(3.0, 0.5) == pytest.approx(8.0)
    with pytest.raises(ValueError):
        one_shot_capacity_upper(1.0, 0.0)


def test_simulation_cost_formulas():
    d, delta, eta = 2.0 ** 40, 0.125, 1e-4
    core = 40 - 3 - 7
    one = simulation_cost_lower(d, delta, eta, "oneway")
    assert one["value"] == pytest.approx((1 - 0.01) ** 2 * core)
    assert one["admissible"]
    rnd = simulation_cost_lower(d, delta, eta, "rounds", r=4)
    assert rnd["value"] == pytest.approx(core / 40)
    inter = simulation_cost_lower(d, delta, 1e-8, "interactive")
    assert inter["value"] == pytest.approx(core / (30 * (math.log2(40) - 2 * math.log2(1e-8))))
    assert set(inter["gates"]) == {"eta_lt_(delta/8)^4", "eta_lt_(delta/10)^4"}


def test_simulation_cost_gates():
    rec = simulation_cost_lower(2 ** 20, 0.1, 0.5, "oneway")
    assert not rec["admissible"]
    with pytest.raises(GateFailure) as exc:
        simulation_cost_lower(2 ** 20, 0.1, 0.5, "oneway", strict=True)
    assert exc.value.record["mode"] == "oneway"
    with pytest.raises(ValueError):
        simulation_cost_lower(2 ** 20, 0.1, 0.01, "rounds", r=1)
    with pytest.raises(ValueError):
        simulation_cost_lower(2 ** 20, 0.1, 0.01, "other")
    assert simulation_cost_lower(2 ** 4, 0.1, 1e-4, "oneway")["value"] == 0.0


def test_separation_crossover():
    cross = separation_crossover()
    assert cross["exists"]
    x = cross["log2_d_star"]
    assert 2 < x < 60
    assert separation_gap(x + 1e-6) > 0 >= separation_gap(x - 1e-6)
    assert cross["gap_at_60"] > 0
