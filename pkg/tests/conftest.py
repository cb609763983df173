"""Shared fixtures: small hand-checkable systems plus the bundled dataset."""

import copy
import json
from pathlib import Path

import pytest

from windgep import load_problem

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "windgep" / "data"
DATASET_PATH = DATA_DIR / "system_standin.json"

# weak-regime six-level turbine output distribution used across wind tests
WEAK_PROBS = [0.475, 0.3036, 0.0854, 0.0623, 0.0098, 0.0639]
STRONG_PROBS = [0.2942, 0.1734, 0.1543, 0.1694, 0.07714, 0.1314]


def make_toy_config(**overrides) -> dict:
    """Two-thermal-type, two-stage system with loose constraints.

    Round numbers so cost and adequacy oracles can be recomputed by hand:
    type A = 100 MW blocks, type B = 50 MW blocks, 100-hour years.
    """
    cfg = {
        "units": [
            {
                "id": "A", "kind": "thermal", "fuel_class": "COAL",
                "unit_capacity_mw": 100.0, "for_rate": 0.1,
                "invest_cost_per_kw": 1000.0, "fixed_om_per_mw_year": 20000.0,
                "variable_om_per_kwh": 0.02, "salvage_factor": 0.25,
                "candidate": True, "existing_units": 2,
            },
            {
                "id": "B", "kind": "thermal", "fuel_class": "LNG",
                "unit_capacity_mw": 50.0, "for_rate": 0.0,
                "invest_cost_per_kw": 2000.0, "fixed_om_per_mw_year": 10000.0,
                "variable_om_per_kwh": 0.05, "salvage_factor": 0.5,
                "candidate": True, "existing_units": 1,
            },
        ],
        "horizon": {
            "stage_count": 2, "years_per_stage": 1, "lead_time_years": 0,
            "hours_per_year": 100.0, "peak_loads_mw": [200.0, 240.0],
            "base_load_ratio": 0.5, "ldc_breakpoint": None,
        },
        "economics": {"discount_rate": 0.1, "eens_cost_per_kwh": 0.05},
        "constraints": {
            "max_builds_per_stage": {"A": 2, "B": 2},
            "fuel_mix": {},
            "reserve_min": -0.5, "reserve_max": 4.0, "lolp_max": 1.0,
            "capacity_grid_mw": None, "prune_threshold": 0.0,
        },
        "ga": {
            "population_size": 16, "generations": 12,
            "crossover_fraction": 0.6, "crossover_type_probs": [0.7, 0.15, 0.15],
            "mutants_per_generation": 2, "elite_count": 2,
            "penalty_weight": None, "seed": 7, "runs": 2,
        },
    }
    cfg = copy.deepcopy(cfg)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(copy.deepcopy(value))
        else:
            cfg[key] = copy.deepcopy(value)
    return cfg


def make_nine_plan_config(**overrides) -> dict:
    """One stage, two candidate types, two builds max each: 9 possible plans.

    The reserve floor rules out the cheapest corner so the optimum is
    interior and a blind search has something to find.
    """
    cfg = make_toy_config(**overrides)
    cfg["horizon"].update({"stage_count": 1, "peak_loads_mw": [300.0]})
    cfg["constraints"].update({"reserve_min": 0.15, "reserve_max": 0.70,
                               "lolp_max": 1.0})
    cfg["ga"].update({"population_size": 12, "generations": 10, "runs": 1})
    return cfg


def make_wind_toy_config(**overrides) -> dict:
    """Toy system plus a three-level 30 MW wind farm with explicit levels."""
    cfg = make_toy_config(**overrides)
    cfg["units"].append({
        "id": "W", "kind": "wind", "fuel_class": "WIND",
        "unit_capacity_mw": 30.0, "for_rate": 0.0,
        "invest_cost_per_kw": 1500.0, "fixed_om_per_mw_year": 11500.0,
        "variable_om_per_kwh": 0.0025, "salvage_factor": 0.1,
        "candidate": True, "existing_units": 0,
        "farm": {"levels": [[0.0, 0.5], [15.0, 0.3], [30.0, 0.2]]},
    })
    cfg["constraints"]["max_builds_per_stage"]["W"] = 2
    return cfg


@pytest.fixture
def toy_problem():
    return load_problem(make_toy_config())


@pytest.fixture
def nine_plan_problem():
    return load_problem(make_nine_plan_config())


@pytest.fixture
def wind_toy_problem():
    return load_problem(make_wind_toy_config())


@pytest.fixture(scope="session")
def dataset_config() -> dict:
    with open(DATASET_PATH) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def dataset_problem():
    return load_problem(DATASET_PATH)


@pytest.fixture(scope="session")
def dataset_problem_strong():
    return load_problem(DATASET_PATH, regime="strong")
