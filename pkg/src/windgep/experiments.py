"""Experiment drivers: single solve, wind-penetration sweep, investment sweep.

Each driver is deterministic for a given master seed: per-point and per-run
seeds are derived from it, and every cached quantity is a canonical function
of fleet composition, so results do not depend on execution order or worker
count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .evaluate import PlanEvaluation, StageCache, evaluate_plan
from .ga import MultiRunResult, derive_seeds, multi_run, repair_plan
from .problem import ConfigError, ExpansionPlan, Problem

def wind_type_name(problem: Problem) -> str:
    """Name of the unit type the wind sweeps act on.

    Sweeps fix or re-price wind farms, so the problem must carry exactly
    one type with a farm outage model.
    """
    names = [u.id for u in problem.units if u.farm_model is not None]
    if len(names) != 1:
        raise ConfigError("wind sweeps need exactly one farm type, found "
                          f"{names if names else 'none'}")
    return names[0]


@dataclass(frozen=True)
class SweepSpec:
    """One sweep request: which axis to walk and the points on it."""

    mode: str                              # "penetration" | "investment"
    penetration: tuple[int, ...] = ()      # wind farms fixed per stage, one point each
    investment: tuple[float, ...] = ()     # wind investment costs to re-solve at, $/kW
    regime: str | None = None              # wind regime tag, recorded in outputs

    def __post_init__(self) -> None:
        if self.mode not in ("penetration", "investment"):
            raise ConfigError(f"sweep mode must be 'penetration' or "
                              f"'investment', got {self.mode!r}")
        if self.mode == "penetration":
            if not self.penetration:
                raise ConfigError("penetration sweep needs at least one "
                                  "farms-per-stage count")
            if any(w < 0 for w in self.penetration):
                raise ConfigError("farms-per-stage counts must be >= 0")
        else:
            if not self.investment:
                raise ConfigError("investment sweep needs at least one cost")
            if any(c <= 0 for c in self.investment):
                raise ConfigError("investment costs must be positive")

    @property
    def values(self) -> tuple[float, ...]:
        return (tuple(float(w) for w in self.penetration)
                if self.mode == "penetration" else self.investment)


@dataclass(frozen=True, eq=False)
class PointRecord:
    """Outcome at one sweep point."""

    value: float                        # farms per stage, or wind cost in $/kW
    seed: int                           # master seed of this point's runs
    result: MultiRunResult = field(repr=False)
    evaluation: PlanEvaluation = field(repr=False)

    @property
    def plan(self) -> ExpansionPlan:
        return self.evaluation.plan

    @property
    def feasible(self) -> bool:
        return self.evaluation.feasible

    @property
    def total_cost(self) -> float:
        return self.evaluation.breakdown.total

    @property
    def operational_cost(self) -> float:
        return self.evaluation.breakdown.operational

    @property
    def lolp_by_stage(self) -> tuple[float, ...]:
        return self.evaluation.lolp_by_stage

    @property
    def first_violation(self) -> tuple[str, int, str] | None:
        """(constraint kind, stage, subject) of the first violated record."""
        for rec in self.evaluation.report.records:
            if rec.violation > 0.0:
                return (rec.kind, rec.stage, rec.subject)
        return None

    def wind_units_by_stage(self, problem: Problem) -> np.ndarray:
        j = problem.type_index[wind_type_name(problem)]
        return self.evaluation.plan.builds[:, j] + problem.fixed_builds[:, j]

    def penetration_pct(self, problem: Problem) -> float:
        """Horizon-end cumulative wind nameplate over the final-stage peak."""
        j = problem.type_index[wind_type_name(problem)]
        nameplate = (problem.existing_counts[j]
                     + self.wind_units_by_stage(problem).sum()) \
            * problem.capacities_mw[j]
        return 100.0 * float(nameplate) / problem.horizon.peak_loads_mw[-1]


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """One record per sweep point, in spec order; no silent skips."""

    spec: SweepSpec
    problems: tuple[Problem, ...] = field(repr=False)
    points: tuple[PointRecord, ...]
    seed: int

    def first_infeasible(self) -> PointRecord | None:
        for point in self.points:
            if not point.feasible:
                return point
        return None

    def max_feasible_value(self) -> float | None:
        feas = [p.value for p in self.points if p.feasible]
        return max(feas) if feas else None

    def first_lolp_violation(self) -> tuple[float, int] | None:
        """(point value, 1-based stage) of the first LOLP break, if any."""
        for problem, point in zip(self.problems, self.points):
            lolp_max = problem.constraints.lolp_max
            for s, val in enumerate(point.lolp_by_stage, start=1):
                if val > lolp_max:
                    return (point.value, s)
        return None


@dataclass(frozen=True, eq=False)
class SolveResult:
    """A multi-run GA solve plus the winning plan's evaluation."""

    problem: Problem = field(repr=False)
    result: MultiRunResult = field(repr=False)
    evaluation: PlanEvaluation = field(repr=False)
    seed: int

    @property
    def plan(self) -> ExpansionPlan:
        return self.evaluation.plan

    @property
    def feasible(self) -> bool:
        return self.evaluation.feasible


def solve(problem: Problem, *, seed: int | None = None, runs: int | None = None,
          threads: int = 1, cache: StageCache | None = None) -> SolveResult:
    """Best-of-runs GA search on one problem."""
    changes = {}
    if seed is not None:
        changes["seed"] = int(seed)
    if runs is not None:
        changes["runs"] = int(runs)
    if changes:
        problem = problem.with_ga(**changes)
    mr = multi_run(problem, threads=threads, cache=cache)
    evaluation = mr.best.evaluation
    return SolveResult(problem=problem, result=mr, evaluation=evaluation,
                       seed=problem.ga.seed)


def _point_problem(base: Problem, spec: SweepSpec, value) -> Problem:
    wind = wind_type_name(base)
    if spec.mode == "penetration":
        stages = base.horizon.stage_count
        return (base.with_fixed_builds(wind, (int(value),) * stages)
                .with_excluded_types((wind,)))
    return base.with_invest_cost(wind, float(value))


def _solve_point(args) -> MultiRunResult:
    problem, seed = args
    return multi_run(problem.with_ga(seed=seed), threads=1)


def _best_pooled(problem: Problem, candidates: list[ExpansionPlan],
                 fallback: PlanEvaluation,
                 cache: StageCache) -> PlanEvaluation:
    """Cheapest feasible candidate under ``problem``; deterministic tie-break.

    Candidate plans come from every sweep point, so each point picks from
    the same pool.  Each candidate is scored both as-is and after the
    deterministic stage-wise repair: plans tuned at one sweep point often
    sit just outside another point's reserve band, and the repaired variant
    carries them across.  Feasible beats infeasible; ties in cost break on
    plan bytes.
    """
    best, best_key = fallback, (not fallback.feasible,
                                fallback.breakdown.total, fallback.plan.key)
    seen = {fallback.plan.key}
    for plan in candidates:
        trimmed = plan.builds.copy()
        repair_plan(problem, trimmed)
        for variant in (plan, ExpansionPlan(trimmed)):
            if variant.key in seen:
                continue
            seen.add(variant.key)
            ev = evaluate_plan(problem, variant, cache)
            key = (not ev.feasible, ev.breakdown.total, ev.plan.key)
            if key < best_key:
                best, best_key = ev, key
    return best


def run_sweep(base: Problem, spec: SweepSpec, *, seed: int | None = None,
              threads: int = 1) -> ExperimentResult:
    """Walk the sweep points in order and solve each one.

    Every point's winning plan is then re-scored at every other point
    (pooled polish): points pick the cheapest feasible plan from the shared
    pool, which removes search noise from cross-point comparisons without
    changing what any plan costs.
    """
    master = int(seed) if seed is not None else base.ga.seed
    point_seeds = derive_seeds(master, len(spec.values))
    problems = tuple(_point_problem(base, spec, v) for v in spec.values)

    # points share an adequacy cache only while they share the capacity
    # grid; a point that deactivates the last farm can coarsen an auto
    # grid and needs its own tables
    def point_cache(problem: Problem, shared: StageCache) -> StageCache:
        if problem.adequacy_digest == base.adequacy_digest:
            return shared
        return StageCache(problem)

    if threads > 1 and len(problems) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(problems))) as pool:
            results = list(pool.map(_solve_point, zip(problems, point_seeds)))
    else:
        cache = StageCache(base)
        results = [multi_run(p.with_ga(seed=s), threads=1,
                             cache=point_cache(p, cache))
                   for p, s in zip(problems, point_seeds)]

    # pooled polish
    shared = StageCache(base)
    pool_plans: list[ExpansionPlan] = []
    seen = set()
    for mr in results:
        for run in mr.runs:
            if run.plan.key not in seen:
                seen.add(run.plan.key)
                pool_plans.append(run.plan)
    points = []
    for problem, point_seed, value, mr in zip(problems, point_seeds,
                                              spec.values, results):
        cache = point_cache(problem, shared)
        fallback = evaluate_plan(problem, mr.best.plan, cache)
        evaluation = _best_pooled(problem, pool_plans, fallback, cache)
        points.append(PointRecord(value=value, seed=point_seed, result=mr,
                                  evaluation=evaluation))
    return ExperimentResult(spec=spec, problems=problems,
                            points=tuple(points), seed=master)


def penetration_sweep(base: Problem, farms_per_stage: tuple[int, ...], *,
                      regime: str | None = None, seed: int | None = None,
                      threads: int = 1) -> ExperimentResult:
    """Fix w wind farms per stage for each w and solve the thermal complement."""
    spec = SweepSpec(mode="penetration",
                     penetration=tuple(int(w) for w in farms_per_stage),
                     regime=regime)
    return run_sweep(base, spec, seed=seed, threads=threads)


def investment_sweep(base: Problem, costs_per_kw: tuple[float, ...], *,
                     regime: str | None = None, seed: int | None = None,
                     threads: int = 1) -> ExperimentResult:
    """Re-solve with wind selectable at each wind investment cost."""
    spec = SweepSpec(mode="investment",
                     investment=tuple(float(c) for c in costs_per_kw),
                     regime=regime)
    return run_sweep(base, spec, seed=seed, threads=threads)
