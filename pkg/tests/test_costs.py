"""Discounting, merit-order dispatch, and cost-breakdown identities."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windgep import ExpansionPlan, dispatch_energy, evaluate_plan, load_problem
from windgep.costs import (build_breakdown, discount_to_base, eens_cost,
                           investment_cost, om_cost, salvage_value)

from conftest import make_toy_config

# toy economics: d = 0.1, lead 0, one-year stages, 100-hour years
D = 1.1


def test_discount_to_base():
    assert discount_to_base(121.0, 2.0, 0.1) == pytest.approx(100.0, rel=1e-12)
    assert discount_to_base(50.0, 0.0, 0.1) == 50.0


def test_investment_hand_values(toy_problem):
    plan = ExpansionPlan(np.array([[1, 0], [0, 2]]))
    # stage 0: one 100 MW type-A block at 1000 $/kW, paid at year 0
    assert investment_cost(toy_problem, plan, 0) == pytest.approx(100.0, rel=1e-12)
    # stage 1: two 50 MW type-B blocks at 2000 $/kW, paid one year out
    assert investment_cost(toy_problem, plan, 1) == pytest.approx(200.0 / D,
                                                                  rel=1e-12)


def test_salvage_hand_value(toy_problem):
    plan = ExpansionPlan(np.array([[1, 0], [0, 2]]))
    # residuals: A 100 * 0.25, B 200 * 0.5, recovered at the 2-year horizon end
    expected = (100.0 * 0.25 + 200.0 * 0.5) / D**2
    assert salvage_value(toy_problem, plan) == pytest.approx(expected, rel=1e-12)


def test_deferring_a_build_costs_less(toy_problem):
    now = investment_cost(toy_problem, ExpansionPlan(np.array([[1, 0], [0, 0]])), 0)
    later = investment_cost(toy_problem, ExpansionPlan(np.array([[0, 0], [1, 0]])), 1)
    assert later == pytest.approx(now / D, rel=1e-12)
    assert later < now


def test_fixed_builds_paid_like_planned(toy_problem):
    paid = toy_problem.with_fixed_builds("A", (1, 0))
    zero = ExpansionPlan.zeros(2, 2)
    explicit = ExpansionPlan(np.array([[1, 0], [0, 0]]))
    assert investment_cost(paid, zero, 0) == investment_cost(toy_problem,
                                                             explicit, 0)
    assert salvage_value(paid, zero) == salvage_value(toy_problem, explicit)


def test_dispatch_band_oracle(toy_problem):
    # one 100 MW A block fills the sub-base band (100 MW x 100 h); one 50 MW
    # B block takes the 100-150 MW slice of the linear tail: mean duration
    # (100 + 50) / 2 over 50 MW
    curve = toy_problem.horizon.ldcs[0]
    ees = dispatch_energy(toy_problem, np.array([100.0, 50.0]), curve)
    assert ees[0] == pytest.approx(10_000.0, rel=1e-12)
    assert ees[1] == pytest.approx(75.0 * 50.0, rel=1e-12)


def test_dispatch_wind_credited_at_expected_output(wind_toy_problem):
    # a 30 MW farm with E = 10.5 MW serves 10.5 MW x 100 h from the base band
    curve = wind_toy_problem.horizon.ldcs[0]
    ees = dispatch_energy(wind_toy_problem, np.array([0.0, 0.0, 30.0]), curve)
    assert ees[2] == pytest.approx(1050.0, rel=1e-12)
    assert ees[0] == ees[1] == 0.0


def test_dispatch_merit_ties_break_in_config_order():
    cfg = make_toy_config()
    cfg["units"][1]["variable_om_per_kwh"] = cfg["units"][0]["variable_om_per_kwh"]
    prob = load_problem(cfg)
    assert list(prob.merit_order) == [0, 1]
    curve = prob.horizon.ldcs[0]
    ees = dispatch_energy(prob, np.array([100.0, 50.0]), curve)
    assert ees[0] == pytest.approx(10_000.0, rel=1e-12)


def test_dispatch_energy_conservation(toy_problem):
    # with enough credited capacity the fleet serves the whole curve
    curve = toy_problem.horizon.ldcs[0]
    rng = np.random.default_rng(11)
    for _ in range(50):
        installed = rng.uniform(0.0, 400.0, size=2)
        installed[rng.integers(2)] += 200.0   # push credited total past peak
        ees = dispatch_energy(toy_problem, installed, curve)
        assert ees.sum() == pytest.approx(curve.total_energy, rel=1e-9)
        assert np.all(ees >= 0.0)


def test_dispatch_energy_short_fleet_matches_curve_integral(toy_problem):
    curve = toy_problem.horizon.ldcs[0]
    installed = np.array([60.0, 30.0])
    ees = dispatch_energy(toy_problem, installed, curve)
    top = installed.sum()
    assert ees.sum() == pytest.approx(curve.total_energy - curve.energy_above(top),
                                      rel=1e-12)
    assert dispatch_energy(toy_problem, np.zeros(2), curve).sum() == 0.0


def test_om_and_eens_cost_hand_values(toy_problem):
    installed = np.array([200.0, 50.0])
    ees = np.array([10_000.0, 3_750.0])
    # fixed: 200 MW * 20 k$ + 50 MW * 10 k$ = 4.5 M$; variable:
    # 10 GWh * 20 $/MWh + 3.75 GWh * 50 $/MWh = 0.3875 M$; both mid-year
    assert om_cost(toy_problem, installed, ees, 0) == pytest.approx(
        4.8875 * D**-0.5, rel=1e-12)
    assert eens_cost(toy_problem, 1250.0, 1) == pytest.approx(
        1250.0 * 0.05 / 1000.0 * D**-1.5, rel=1e-12)


def test_breakdown_matches_component_functions(toy_problem):
    plan = ExpansionPlan(np.array([[1, 1], [2, 0]]))
    installed = np.array([[300.0, 100.0], [500.0, 100.0]])
    ees = np.array([[9_000.0, 2_000.0], [11_000.0, 3_000.0]])
    eens = np.array([40.0, 70.0])
    bd = build_breakdown(toy_problem, plan, installed, ees, eens)
    for t in range(2):
        assert bd.investment_by_stage[t] == pytest.approx(
            investment_cost(toy_problem, plan, t), rel=1e-12)
        assert (bd.fixed_om_by_stage[t] + bd.variable_om_by_stage[t]
                ) == pytest.approx(om_cost(toy_problem, installed[t], ees[t], t),
                                   rel=1e-12)
        assert bd.eens_cost_by_stage[t] == pytest.approx(
            eens_cost(toy_problem, eens[t], t), rel=1e-12)
    assert bd.salvage == pytest.approx(salvage_value(toy_problem, plan), rel=1e-12)
    assert bd.operational == pytest.approx(bd.fixed_om + bd.variable_om
                                           + bd.eens_cost, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=2), min_size=4, max_size=4))
def test_breakdown_identity_on_evaluated_plans(builds):
    # total = investment + fixed O&M + variable O&M + shortfall - salvage
    # on every evaluated plan, to tight relative tolerance
    prob = load_problem(make_toy_config())
    plan = ExpansionPlan(np.array(builds, dtype=np.int64).reshape(2, 2))
    bd = evaluate_plan(prob, plan).breakdown
    parts = bd.investment + bd.fixed_om + bd.variable_om + bd.eens_cost - bd.salvage
    assert bd.total == pytest.approx(parts, rel=1e-9)
    assert bd.ees_mwh.shape == (2, 2)
    assert np.all(bd.eens_mwh_by_stage >= 0.0)
