"""Constraint records, violation magnitudes, and fast-path/report agreement."""

import numpy as np
import pytest

from windgep import ExpansionPlan, evaluate_plan, load_problem
from windgep.constraints import (build_report, check_build_limits, check_fuel_mix,
                                 check_lolp, check_reserve, violation_arrays)
from windgep.problem import cumulative_state

from conftest import make_toy_config


def test_build_limits_flag_offending_stage_and_type(toy_problem):
    plan = ExpansionPlan(np.array([[3, 0], [0, 4]]))   # caps are 2 per stage
    records = check_build_limits(toy_problem, plan)
    assert [(r.stage, r.subject, r.violation) for r in records] == \
        [(1, "A", 1.0), (2, "B", 2.0)]
    assert check_build_limits(toy_problem, ExpansionPlan.zeros(2, 2)) == []


def test_fuel_mix_share_hand_case():
    cfg = make_toy_config(constraints={"fuel_mix": {"COAL": [0.0, 0.5],
                                                    "LNG": [0.3, 1.0]}})
    prob = load_problem(cfg)
    records = check_fuel_mix(prob, np.array([600.0, 400.0]), 0)
    by_class = {r.subject: r for r in records}
    assert by_class["COAL"].measured == pytest.approx(0.6)
    assert by_class["COAL"].violation == pytest.approx(0.1)
    assert by_class["LNG"].violation == 0.0
    with pytest.raises(ValueError, match="zero installed capacity"):
        check_fuel_mix(prob, np.zeros(2), 1)


def test_reserve_band_hand_case(toy_problem):
    # peak 200 MW, band [-0.5, 4.0]: floor 100 MW, ceiling 1000 MW
    below = check_reserve(toy_problem, 90.0, 0)
    assert below.violation == pytest.approx(10.0)
    assert below.normalized == pytest.approx(10.0 / 200.0)
    assert below.measured == pytest.approx(-0.55)
    above = check_reserve(toy_problem, 1100.0, 0)
    assert above.violation == pytest.approx(100.0)
    inside = check_reserve(toy_problem, 500.0, 0)
    assert inside.violation == 0.0 and inside.measured == pytest.approx(1.5)


def test_lolp_cap_hand_case(toy_problem):
    rec = check_lolp(toy_problem, 0.02, 1)
    assert rec.stage == 2 and rec.violation == 0.0   # toy cap is 1.0
    cfg = make_toy_config(constraints={"lolp_max": 0.01})
    tight = load_problem(cfg)
    rec = check_lolp(tight, 0.025, 0)
    assert rec.violation == pytest.approx(0.015)
    assert rec.normalized == pytest.approx(1.5)


def test_report_record_ordering(toy_problem):
    plan = ExpansionPlan.zeros(2, 2)
    installed = cumulative_state(toy_problem, plan).installed_mw
    report = build_report(toy_problem, plan, installed, np.zeros(2))
    assert [r.kind for r in report.records] == ["reserve", "lolp"] * 2
    assert [r.stage for r in report.records] == [1, 1, 2, 2]


def test_fast_path_matches_report_path():
    cfg = make_toy_config(constraints={"fuel_mix": {"COAL": [0.2, 0.6],
                                                    "LNG": [0.0, 0.6]},
                                       "reserve_min": 0.1, "reserve_max": 0.9,
                                       "lolp_max": 0.05})
    prob = load_problem(cfg)
    rng = np.random.default_rng(5)
    for _ in range(25):
        plan = ExpansionPlan(rng.integers(0, 4, size=(2, 2)))
        installed = cumulative_state(prob, plan).installed_mw
        lolps = rng.uniform(0.0, 0.12, size=2)
        arrays = violation_arrays(prob, plan, installed, lolps)
        report = build_report(prob, plan, installed, lolps)
        assert arrays["total_normalized"] == pytest.approx(
            report.total_normalized, rel=1e-12, abs=1e-15)
        np.testing.assert_allclose(arrays["reserve_margins"],
                                   report.reserve_margins, rtol=1e-12)
        assert (arrays["total_normalized"] == 0.0) == report.feasible


def test_report_worst_picks_largest_normalized(toy_problem):
    plan = ExpansionPlan(np.array([[3, 0], [0, 0]]))   # build excess 1 unit
    installed = cumulative_state(toy_problem, plan).installed_mw
    report = build_report(toy_problem, plan, installed, np.zeros(2))
    assert not report.feasible
    assert report.violation_count == 1
    assert report.worst().kind == "build_limit"
    assert report.total_normalized == pytest.approx(1.0)


def test_zero_plan_on_dataset_is_infeasible(dataset_problem):
    zero = ExpansionPlan.zeros(dataset_problem.stage_count,
                               dataset_problem.n_types)
    ev = evaluate_plan(dataset_problem, zero)
    assert not ev.feasible
    kinds = {r.kind for r in ev.report.records if r.violation > 0.0}
    # the 5.1 GW starting fleet misses the 15% reserve floor from stage one
    # and cannot carry 19 GW of final-stage peak load
    assert "reserve" in kinds and "lolp" in kinds
    first = next(r for r in ev.report.records if r.violation > 0.0)
    assert first.stage == 1
