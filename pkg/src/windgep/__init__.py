"""Least-cost generation expansion planning with probabilistic wind farm models.

Wind farms enter the reliability model as multi-state units built from a
turbine power curve and a wind-speed regime; expansion plans are integer
build schedules scored by discounted cost plus reliability and policy
constraints and searched with a genetic algorithm.
"""

from .copt import (OutageTable, convolve_multi_state, convolve_two_state,
                   eens, empty_table, lolp)
from .costs import CostBreakdown, build_breakdown, dispatch_energy
from .evaluate import (PlanEvaluation, StageCache, evaluate_feasibility,
                       evaluate_plan, fleet_outage_table, total_objective)
from .ga import (GARunResult, MultiRunResult, derive_seeds, evolve, fitness,
                 multi_run, repair_plan)
from .ldc import LoadDurationCurve, build_ldc
from .problem import (ConfigError, ConstraintParams, EconomicParams,
                      ExpansionPlan, GAConfig, PlanningHorizon, Problem,
                      UnitType, config_digest, load_problem, problem_digest,
                      problem_to_config)
from .wind import (FarmOutputModel, PowerCurve, TurbineOutputModel, WindSeries,
                   aggregate_farm, availability_distribution,
                   build_turbine_model, fit_power_curve, read_wind_series)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConstraintParams", "CostBreakdown", "EconomicParams",
    "ExpansionPlan", "FarmOutputModel", "GAConfig", "GARunResult",
    "LoadDurationCurve", "MultiRunResult", "OutageTable", "PlanEvaluation",
    "PlanningHorizon", "PowerCurve", "Problem", "StageCache",
    "TurbineOutputModel", "UnitType", "WindSeries", "aggregate_farm",
    "availability_distribution", "build_breakdown", "build_ldc",
    "build_turbine_model", "config_digest", "convolve_multi_state",
    "convolve_two_state", "derive_seeds", "dispatch_energy", "eens",
    "empty_table",
    "evaluate_feasibility", "evaluate_plan", "evolve", "fit_power_curve",
    "fitness", "fleet_outage_table", "load_problem", "lolp", "multi_run",
    "problem_digest", "problem_to_config", "read_wind_series", "repair_plan",
    "total_objective",
]
