"""Expansion-planning problem definition: unit types, horizon, policy, and config I/O."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from .ldc import LoadDurationCurve, build_ldc
from .wind import (FarmOutputModel, PowerCurve, TurbineOutputModel,
                   aggregate_farm, fit_power_curve)

FUEL_CLASSES = ("OIL", "LNG", "COAL", "PWR", "PHWR", "WIND")
THERMAL, WIND = "thermal", "wind"


class ConfigError(ValueError):
    """Invalid or inconsistent configuration; message names the offending path."""


@dataclass(frozen=True, eq=False)
class UnitType:
    """One generating technology: capacity, reliability, and cost data.

    Costs are stored in the config's natural units ($/kW, $/MW-yr, $/kWh);
    the normalized M$ values used everywhere internally are derived.
    """

    id: str
    kind: str                    # "thermal" or "wind"
    fuel_class: str
    unit_capacity_mw: float
    for_rate: float
    invest_cost_per_kw: float
    fixed_om_per_mw_year: float
    variable_om_per_kwh: float
    salvage_factor: float
    candidate: bool
    existing_units: int = 0
    fixed_builds: tuple[int, ...] = ()   # exogenous additions per stage, if any
    farm_spec: dict | None = None        # wind only: raw farm description
    farm_model: FarmOutputModel | None = None

    def __post_init__(self) -> None:
        if self.kind not in (THERMAL, WIND):
            raise ConfigError(f"unit {self.id}: kind must be 'thermal' or 'wind', "
                              f"got {self.kind!r}")
        if self.fuel_class not in FUEL_CLASSES:
            raise ConfigError(f"unit {self.id}: unknown fuel class "
                              f"{self.fuel_class!r}")
        if self.unit_capacity_mw <= 0.0:
            raise ConfigError(f"unit {self.id}: unit_capacity_mw must be positive")
        if not (0.0 <= self.for_rate < 1.0):
            raise ConfigError(f"unit {self.id}: for_rate must lie in [0, 1)")
        if not (0.0 <= self.salvage_factor < 1.0):
            raise ConfigError(f"unit {self.id}: salvage_factor must lie in [0, 1)")
        if min(self.invest_cost_per_kw, self.fixed_om_per_mw_year,
               self.variable_om_per_kwh) < 0.0:
            raise ConfigError(f"unit {self.id}: costs must be non-negative")
        if self.existing_units < 0 or any(n < 0 for n in self.fixed_builds):
            raise ConfigError(f"unit {self.id}: unit counts must be non-negative")
        if self.kind == WIND and self.farm_model is None:
            raise ConfigError(f"unit {self.id}: wind units need a farm model")
        if self.kind == THERMAL and self.farm_spec is not None:
            raise ConfigError(f"unit {self.id}: thermal units cannot carry a farm")

    # normalized costs, all in M$
    @property
    def invest_m_per_mw(self) -> float:
        return self.invest_cost_per_kw / 1000.0

    @property
    def fixed_om_m_per_mw_year(self) -> float:
        return self.fixed_om_per_mw_year / 1e6

    @property
    def variable_om_m_per_mwh(self) -> float:
        return self.variable_om_per_kwh / 1000.0

    @property
    def credit_factor(self) -> float:
        """Fraction of nameplate counted as firm energy supply when dispatching."""
        if self.farm_model is None:
            return 1.0
        return self.farm_model.expected_output / self.farm_model.nameplate


@dataclass(frozen=True)
class PlanningHorizon:
    """Staged horizon: T stages of s years each after a construction lead time."""

    stage_count: int
    years_per_stage: int
    lead_time_years: int
    hours_per_year: float
    peak_loads_mw: tuple[float, ...]
    base_load_ratio: float
    ldc_breakpoint: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.stage_count < 1 or self.years_per_stage < 1:
            raise ConfigError("horizon: stage_count and years_per_stage must be >= 1")
        if self.lead_time_years < 0:
            raise ConfigError("horizon: lead_time_years must be >= 0")
        if self.hours_per_year <= 0.0:
            raise ConfigError("horizon: hours_per_year must be positive")
        if len(self.peak_loads_mw) != self.stage_count:
            raise ConfigError(f"horizon: peak_loads_mw has {len(self.peak_loads_mw)} "
                              f"entries for {self.stage_count} stages")
        if any(p <= 0.0 for p in self.peak_loads_mw):
            raise ConfigError("horizon: peak loads must be positive")
        if not (0.0 < self.base_load_ratio <= 1.0):
            raise ConfigError("horizon: base_load_ratio must lie in (0, 1]")

    def stage_offset_years(self, stage: int) -> int:
        """Years from the decision base to the in-service start of a stage (0-based)."""
        return self.lead_time_years + self.years_per_stage * stage

    @property
    def end_of_horizon_years(self) -> int:
        return self.stage_offset_years(self.stage_count)

    @cached_property
    def ldcs(self) -> tuple[LoadDurationCurve, ...]:
        return tuple(build_ldc(peak, self.base_load_ratio, self.hours_per_year,
                               self.ldc_breakpoint)
                     for peak in self.peak_loads_mw)


@dataclass(frozen=True)
class EconomicParams:
    discount_rate: float
    eens_cost_per_kwh: float

    def __post_init__(self) -> None:
        if self.discount_rate < 0.0:
            raise ConfigError("economics: discount_rate must be >= 0")
        if self.eens_cost_per_kwh < 0.0:
            raise ConfigError("economics: eens_cost_per_kwh must be >= 0")

    @property
    def eens_m_per_mwh(self) -> float:
        return self.eens_cost_per_kwh / 1000.0


@dataclass(frozen=True)
class ConstraintParams:
    """Policy bounds applied to every stage of a plan."""

    fuel_mix: dict[str, tuple[float, float]]   # fuel class -> (min, max) share
    reserve_min: float
    reserve_max: float
    lolp_max: float
    capacity_grid_mw: float | None = None      # None -> coarsest exact grid
    prune_threshold: float = 1e-10

    def __post_init__(self) -> None:
        for cls, (lo, hi) in self.fuel_mix.items():
            if cls not in FUEL_CLASSES:
                raise ConfigError(f"constraints.fuel_mix: unknown fuel class {cls!r}")
            if not (0.0 <= lo <= hi <= 1.0):
                raise ConfigError(f"constraints.fuel_mix.{cls}: need "
                                  f"0 <= min <= max <= 1, got ({lo}, {hi})")
        if not (-1.0 < self.reserve_min <= self.reserve_max):
            raise ConfigError("constraints: need -1 < reserve_min <= reserve_max")
        if not (0.0 < self.lolp_max <= 1.0):
            raise ConfigError("constraints: lolp_max must lie in (0, 1]")
        if self.capacity_grid_mw is not None and self.capacity_grid_mw <= 0.0:
            raise ConfigError("constraints: capacity_grid_mw must be positive")
        if self.prune_threshold < 0.0:
            raise ConfigError("constraints: prune_threshold must be >= 0")


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 300
    generations: int = 150
    crossover_fraction: float = 0.6
    crossover_type_probs: tuple[float, float, float] = (0.7, 0.15, 0.15)
    mutants_per_generation: int = 3
    elite_count: int = 3
    penalty_weight: float | None = None   # None -> 10x largest single-stage investment
    seed: int = 0
    runs: int = 1

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ConfigError("ga: population_size must be >= 2")
        if self.generations < 0:
            raise ConfigError("ga: generations must be >= 0")
        if not (0.0 <= self.crossover_fraction <= 1.0):
            raise ConfigError("ga: crossover_fraction must lie in [0, 1]")
        probs = self.crossover_type_probs
        if len(probs) != 3 or any(p < 0.0 for p in probs) \
                or abs(sum(probs) - 1.0) > 1e-9:
            raise ConfigError("ga: crossover_type_probs must be 3 non-negative "
                              "numbers summing to 1")
        if not (0 <= self.elite_count < self.population_size):
            raise ConfigError("ga: elite_count must lie in [0, population_size)")
        if self.mutants_per_generation < 0:
            raise ConfigError("ga: mutants_per_generation must be >= 0")
        if self.mutants_per_generation > self.population_size - self.elite_count:
            raise ConfigError("ga: mutants_per_generation cannot exceed the "
                              "non-elite population")
        if self.penalty_weight is not None and self.penalty_weight < 0.0:
            raise ConfigError("ga: penalty_weight must be >= 0")
        if not (0 <= self.seed < 2 ** 64):
            raise ConfigError("ga: seed must fit in an unsigned 64-bit integer")
        if self.runs < 1:
            raise ConfigError("ga: runs must be >= 1")


@dataclass(frozen=True, eq=False)
class ExpansionPlan:
    """Unit counts added per (stage, type); rows are stages in config type order."""

    builds: np.ndarray

    def __post_init__(self) -> None:
        builds = np.asarray(self.builds, dtype=np.int64)
        builds.setflags(write=False)
        object.__setattr__(self, "builds", builds)
        if builds.ndim != 2:
            raise ValueError("plan must be a 2-d (stage x type) integer matrix")
        if np.any(builds < 0):
            raise ValueError("plan unit counts must be non-negative")

    @property
    def key(self) -> bytes:
        return self.builds.tobytes()

    @staticmethod
    def zeros(stage_count: int, n_types: int) -> "ExpansionPlan":
        return ExpansionPlan(np.zeros((stage_count, n_types), dtype=np.int64))


@dataclass(frozen=True, eq=False)
class CumulativeState:
    """Fleet in service at each stage: existing units plus all additions so far."""

    counts: np.ndarray        # stage x type, unit counts
    installed_mw: np.ndarray  # stage x type, nameplate MW


@dataclass(frozen=True, eq=False)
class Problem:
    """A complete expansion-planning instance."""

    units: tuple[UnitType, ...]
    horizon: PlanningHorizon
    economics: EconomicParams
    constraints: ConstraintParams
    ga: GAConfig
    u_max: np.ndarray                 # stage x type build caps (0 for non-candidates)
    wind_spec: dict | None = None     # raw "wind" config section, for regime swaps
    regime: str | None = None

    def __post_init__(self) -> None:
        u_max = np.asarray(self.u_max, dtype=np.int64)
        u_max.setflags(write=False)
        object.__setattr__(self, "u_max", u_max)
        ids = [u.id for u in self.units]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"units: duplicate ids in {ids}")
        if u_max.shape != (self.horizon.stage_count, len(self.units)):
            raise ConfigError(f"u_max shape {u_max.shape} does not match "
                              f"{self.horizon.stage_count} stages x "
                              f"{len(self.units)} types")
        if np.any(u_max < 0):
            raise ConfigError("u_max entries must be non-negative")
        for u in self.units:
            if u.fixed_builds and len(u.fixed_builds) != self.horizon.stage_count:
                raise ConfigError(f"unit {u.id}: fixed_builds needs one entry per "
                                  f"stage ({self.horizon.stage_count})")

    # --- derived views -----------------------------------------------------

    @property
    def n_types(self) -> int:
        return len(self.units)

    @property
    def stage_count(self) -> int:
        return self.horizon.stage_count

    @cached_property
    def type_index(self) -> dict[str, int]:
        return {u.id: j for j, u in enumerate(self.units)}

    @cached_property
    def capacities_mw(self) -> np.ndarray:
        return np.array([u.unit_capacity_mw for u in self.units])

    @cached_property
    def existing_counts(self) -> np.ndarray:
        return np.array([u.existing_units for u in self.units], dtype=np.int64)

    @cached_property
    def candidate_mask(self) -> np.ndarray:
        return np.array([u.candidate for u in self.units], dtype=bool)

    @cached_property
    def candidate_columns(self) -> np.ndarray:
        return np.flatnonzero(self.candidate_mask)

    @cached_property
    def fixed_builds(self) -> np.ndarray:
        fixed = np.zeros((self.stage_count, self.n_types), dtype=np.int64)
        for j, u in enumerate(self.units):
            if u.fixed_builds:
                fixed[:, j] = u.fixed_builds
        fixed.setflags(write=False)
        return fixed

    @cached_property
    def invest_m_per_mw(self) -> np.ndarray:
        return np.array([u.invest_m_per_mw for u in self.units])

    @cached_property
    def fixed_om_m_per_mw_year(self) -> np.ndarray:
        return np.array([u.fixed_om_m_per_mw_year for u in self.units])

    @cached_property
    def variable_om_m_per_mwh(self) -> np.ndarray:
        return np.array([u.variable_om_m_per_mwh for u in self.units])

    @cached_property
    def salvage_factors(self) -> np.ndarray:
        return np.array([u.salvage_factor for u in self.units])

    @cached_property
    def credit_factors(self) -> np.ndarray:
        return np.array([u.credit_factor for u in self.units])

    @cached_property
    def merit_order(self) -> np.ndarray:
        """Dispatch order: ascending variable cost, ties in config order."""
        return np.argsort(self.variable_om_m_per_mwh, kind="stable")

    @cached_property
    def active_mask(self) -> np.ndarray:
        """Types that can appear in any fleet: existing, fixed, or candidate."""
        return (self.existing_counts > 0) | self.candidate_mask \
            | (self.fixed_builds.sum(axis=0) > 0)

    @cached_property
    def grid_step_mw(self) -> float:
        """Outage-table grid: configured, or the coarsest grid exact for all
        active capacities (floored at 1 MW)."""
        if self.constraints.capacity_grid_mw is not None:
            return self.constraints.capacity_grid_mw
        values_kw: list[int] = []
        for j, u in enumerate(self.units):
            if not self.active_mask[j]:
                continue
            values_kw.append(int(round(u.unit_capacity_mw * 1000)))
            if u.farm_model is not None:
                values_kw.extend(int(round(p * 1000))
                                 for p in u.farm_model.powers if p > 0.0)
        if not values_kw:
            return 1.0
        step = math.gcd(*values_kw) / 1000.0
        return max(step, 1.0)

    @cached_property
    def mix_class_matrix(self) -> np.ndarray:
        """0/1 selector (mix class x type) mapping types to bounded fuel classes."""
        classes = list(self.constraints.fuel_mix.keys())
        mat = np.zeros((len(classes), self.n_types))
        for r, cls in enumerate(classes):
            mat[r] = [1.0 if u.fuel_class == cls else 0.0 for u in self.units]
        mat.setflags(write=False)
        return mat

    @cached_property
    def mix_class_index(self) -> dict[str, int]:
        return {cls: r for r, cls in enumerate(self.constraints.fuel_mix)}

    @cached_property
    def adequacy_digest(self) -> str:
        """Hash of everything that determines adequacy and dispatched energy
        as functions of fleet composition.

        Problems sharing this digest (the same system priced at different
        investment costs, or with different exogenous build schedules) can
        share an evaluation cache: cached values are keyed by composition,
        which already absorbs planned and fixed builds alike.
        """
        h = hashlib.sha256()
        for u in self.units:
            h.update(f"{u.id}|{u.kind}|{u.unit_capacity_mw!r}|{u.for_rate!r}|"
                     f"{u.existing_units}|"
                     f"{u.variable_om_per_kwh!r}".encode())
            if u.farm_model is not None:
                h.update(u.farm_model.powers.tobytes())
                h.update(u.farm_model.probs.tobytes())
        hz = self.horizon
        h.update(f"{hz.stage_count}|{hz.hours_per_year!r}|{hz.peak_loads_mw}|"
                 f"{hz.base_load_ratio!r}|{hz.ldc_breakpoint}".encode())
        h.update(f"{self.grid_step_mw!r}|"
                 f"{self.constraints.prune_threshold!r}".encode())
        return h.hexdigest()

    def cumulative_counts(self, plan: ExpansionPlan) -> np.ndarray:
        """Units in service per (stage, type): existing + fixed + plan, cumulated."""
        if plan.builds.shape != (self.stage_count, self.n_types):
            raise ValueError(f"plan shape {plan.builds.shape} does not match "
                             f"problem ({self.stage_count}, {self.n_types})")
        added = np.cumsum(plan.builds + self.fixed_builds, axis=0)
        return self.existing_counts[np.newaxis, :] + added

    # --- overrides ----------------------------------------------------------

    def _replace_unit(self, type_id: str, **changes) -> "Problem":
        if type_id not in self.type_index:
            raise ConfigError(f"unknown unit type {type_id!r}")
        units = tuple(dataclasses.replace(u, **changes) if u.id == type_id else u
                      for u in self.units)
        return dataclasses.replace(self, units=units)

    def with_excluded_types(self, type_ids: tuple[str, ...]) -> "Problem":
        """Drop types from the candidate set (existing/fixed units remain)."""
        prob = self
        for tid in type_ids:
            prob = prob._replace_unit(tid, candidate=False)
        return prob

    def with_fixed_builds(self, type_id: str, counts: tuple[int, ...]) -> "Problem":
        return self._replace_unit(type_id, fixed_builds=tuple(int(c) for c in counts))

    def with_invest_cost(self, type_id: str, per_kw: float) -> "Problem":
        return self._replace_unit(type_id, invest_cost_per_kw=float(per_kw))

    def with_ga(self, **changes) -> "Problem":
        return dataclasses.replace(self, ga=dataclasses.replace(self.ga, **changes))


def cumulative_state(problem: Problem, plan: ExpansionPlan) -> CumulativeState:
    """Fleet composition in service at every stage under the given plan."""
    counts = problem.cumulative_counts(plan)
    return CumulativeState(counts, counts * problem.capacities_mw[np.newaxis, :])


# --- config loading ----------------------------------------------------------

def _schema() -> dict:
    text = resources.files("windgep.schema").joinpath("config.schema.json").read_text()
    return json.loads(text)


def _check_schema(config: dict) -> None:
    import jsonschema

    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "config" + "".join(f"[{p!r}]" if isinstance(p, str) else f"[{p}]"
                                  for p in err.absolute_path)
        raise ConfigError(f"{path}: {err.message}")


def _turbine_ladder(wind_spec: dict) -> tuple[np.ndarray, int]:
    turbine = wind_spec["turbine"]
    levels = int(turbine.get("output_levels", 6))
    return np.linspace(0.0, turbine["rated_power_mw"], levels), levels


def _regime_turbine(wind_spec: dict, regime: str, unit_id: str) -> TurbineOutputModel:
    regimes = wind_spec.get("regimes", {})
    if regime not in regimes:
        raise ConfigError(f"unit {unit_id}: wind regime {regime!r} not defined "
                          f"under config['wind']['regimes']")
    powers, levels = _turbine_ladder(wind_spec)
    probs = np.asarray(regimes[regime], dtype=float)
    if len(probs) != levels:
        raise ConfigError(f"config['wind']['regimes'][{regime!r}]: expected "
                          f"{levels} probabilities, got {len(probs)}")
    if np.any(probs < 0.0):
        raise ConfigError(f"config['wind']['regimes'][{regime!r}]: probabilities "
                          f"must be non-negative")
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-3:
        raise ConfigError(f"config['wind']['regimes'][{regime!r}]: probabilities "
                          f"sum to {total}, expected 1 within 1e-3")
    # published tables are rounded; renormalize so downstream mass is exactly 1
    return TurbineOutputModel(powers, probs / total)


def turbine_from_config(wind_spec: dict, regime: str) -> TurbineOutputModel:
    """The turbine output model for one named wind regime."""
    return _regime_turbine(wind_spec, regime, "wind")


def power_curve_from_config(wind_spec: dict) -> PowerCurve:
    """The fitted turbine power curve described by a config's wind section."""
    t = wind_spec["turbine"]
    return fit_power_curve(float(t["cut_in_ms"]), float(t["rated_ms"]),
                           float(t["cut_out_ms"]), float(t["rated_power_mw"]))


def _build_farm(unit_cfg: dict, wind_spec: dict | None,
                regime_override: str | None) -> tuple[dict, FarmOutputModel, str | None]:
    unit_id = unit_cfg["id"]
    farm = dict(unit_cfg.get("farm") or {})
    if not farm:
        raise ConfigError(f"unit {unit_id}: wind units need a 'farm' section")
    if "levels" in farm:
        levels = np.asarray(farm["levels"], dtype=float)
        if levels.ndim != 2 or levels.shape[1] != 2:
            raise ConfigError(f"unit {unit_id}: farm levels must be "
                              f"[power_mw, probability] pairs")
        model = FarmOutputModel(levels[:, 0], levels[:, 1],
                                turbine_count=int(farm.get("turbines", 1)),
                                for_rate=float(farm.get("turbine_for_rate", 0.0)),
                                prob_tol=1e-3)
        return farm, model, None
    for key in ("turbines", "turbine_for_rate"):
        if key not in farm:
            raise ConfigError(f"unit {unit_id}: farm needs '{key}' (or explicit "
                              f"'levels')")
    if wind_spec is None:
        raise ConfigError(f"unit {unit_id}: regime-based farm needs a config "
                          f"'wind' section")
    regime = regime_override or farm.get("regime") or wind_spec.get("active_regime")
    if regime is None:
        raise ConfigError(f"unit {unit_id}: no wind regime selected (set "
                          f"farm.regime or wind.active_regime)")
    turbine = _regime_turbine(wind_spec, regime, unit_id)
    model = aggregate_farm(turbine, int(farm["turbines"]),
                           float(farm["turbine_for_rate"]))
    expected = float(model.nameplate)
    if abs(expected - unit_cfg["unit_capacity_mw"]) > 1e-6:
        raise ConfigError(f"unit {unit_id}: unit_capacity_mw "
                          f"{unit_cfg['unit_capacity_mw']} does not match farm "
                          f"nameplate {expected}")
    return farm, model, regime


def load_problem(source: dict | str | Path, regime: str | None = None) -> Problem:
    """Build a Problem from a config dict or JSON file path.

    ``regime`` overrides the wind regime selected by the config.
    """
    if isinstance(source, (str, Path)):
        try:
            with open(source) as fh:
                config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: invalid JSON: {exc}") from exc
    else:
        config = source
    _check_schema(config)

    horizon_cfg = dict(config["horizon"])
    bp = horizon_cfg.get("ldc_breakpoint")
    horizon = PlanningHorizon(
        stage_count=int(horizon_cfg["stage_count"]),
        years_per_stage=int(horizon_cfg["years_per_stage"]),
        lead_time_years=int(horizon_cfg["lead_time_years"]),
        hours_per_year=float(horizon_cfg.get("hours_per_year", 8760.0)),
        peak_loads_mw=tuple(float(p) for p in horizon_cfg["peak_loads_mw"]),
        base_load_ratio=float(horizon_cfg["base_load_ratio"]),
        ldc_breakpoint=tuple(bp) if bp is not None else None,
    )
    econ_cfg = config["economics"]
    economics = EconomicParams(float(econ_cfg["discount_rate"]),
                               float(econ_cfg["eens_cost_per_kwh"]))

    cons_cfg = config["constraints"]
    constraints = ConstraintParams(
        fuel_mix={cls: (float(lo), float(hi))
                  for cls, (lo, hi) in cons_cfg.get("fuel_mix", {}).items()},
        reserve_min=float(cons_cfg["reserve_min"]),
        reserve_max=float(cons_cfg["reserve_max"]),
        lolp_max=float(cons_cfg["lolp_max"]),
        capacity_grid_mw=cons_cfg.get("capacity_grid_mw"),
        prune_threshold=float(cons_cfg.get("prune_threshold", 1e-10)),
    )

    wind_spec = config.get("wind")
    active_regime = None
    units = []
    for unit_cfg in config["units"]:
        farm_spec = farm_model = None
        if unit_cfg["kind"] == WIND:
            farm_spec, farm_model, unit_regime = _build_farm(unit_cfg, wind_spec,
                                                             regime)
            active_regime = unit_regime or active_regime
        units.append(UnitType(
            id=unit_cfg["id"],
            kind=unit_cfg["kind"],
            fuel_class=unit_cfg["fuel_class"],
            unit_capacity_mw=float(unit_cfg["unit_capacity_mw"]),
            for_rate=float(unit_cfg["for_rate"]),
            invest_cost_per_kw=float(unit_cfg["invest_cost_per_kw"]),
            fixed_om_per_mw_year=float(unit_cfg["fixed_om_per_mw_year"]),
            variable_om_per_kwh=float(unit_cfg["variable_om_per_kwh"]),
            salvage_factor=float(unit_cfg["salvage_factor"]),
            candidate=bool(unit_cfg["candidate"]),
            existing_units=int(unit_cfg.get("existing_units", 0)),
            fixed_builds=tuple(int(c) for c in unit_cfg.get("fixed_builds", ())),
            farm_spec=farm_spec,
            farm_model=farm_model,
        ))

    max_builds = cons_cfg.get("max_builds_per_stage", {})
    stage_count = horizon.stage_count
    u_max = np.zeros((stage_count, len(units)), dtype=np.int64)
    for j, unit in enumerate(units):
        entry = max_builds.get(unit.id)
        if unit.candidate and entry is None:
            raise ConfigError(f"constraints.max_builds_per_stage: missing entry for "
                              f"candidate type {unit.id!r}")
        if entry is None:
            continue
        if isinstance(entry, list):
            if len(entry) != stage_count:
                raise ConfigError(f"constraints.max_builds_per_stage.{unit.id}: "
                                  f"expected {stage_count} entries, got {len(entry)}")
            u_max[:, j] = [int(e) for e in entry]
        else:
            u_max[:, j] = int(entry)
    unknown = set(max_builds) - {u.id for u in units}
    if unknown:
        raise ConfigError(f"constraints.max_builds_per_stage: unknown unit types "
                          f"{sorted(unknown)}")

    ga_cfg = config.get("ga", {})
    ga = GAConfig(
        population_size=int(ga_cfg.get("population_size", 300)),
        generations=int(ga_cfg.get("generations", 150)),
        crossover_fraction=float(ga_cfg.get("crossover_fraction", 0.6)),
        crossover_type_probs=tuple(ga_cfg.get("crossover_type_probs",
                                              (0.7, 0.15, 0.15))),
        mutants_per_generation=int(ga_cfg.get("mutants_per_generation", 3)),
        elite_count=int(ga_cfg.get("elite_count", 3)),
        penalty_weight=ga_cfg.get("penalty_weight"),
        seed=int(ga_cfg.get("seed", 0)),
        runs=int(ga_cfg.get("runs", 1)),
    )

    return Problem(units=tuple(units), horizon=horizon, economics=economics,
                   constraints=constraints, ga=ga, u_max=u_max,
                   wind_spec=wind_spec, regime=active_regime)


def problem_to_config(problem: Problem) -> dict:
    """Serialize a Problem back into its config-dict form."""
    units = []
    for j, u in enumerate(problem.units):
        entry: dict = {
            "id": u.id,
            "kind": u.kind,
            "fuel_class": u.fuel_class,
            "unit_capacity_mw": u.unit_capacity_mw,
            "for_rate": u.for_rate,
            "invest_cost_per_kw": u.invest_cost_per_kw,
            "fixed_om_per_mw_year": u.fixed_om_per_mw_year,
            "variable_om_per_kwh": u.variable_om_per_kwh,
            "salvage_factor": u.salvage_factor,
            "candidate": u.candidate,
            "existing_units": u.existing_units,
        }
        if u.fixed_builds:
            entry["fixed_builds"] = list(u.fixed_builds)
        if u.farm_spec is not None:
            farm = dict(u.farm_spec)
            if problem.regime is not None and "levels" not in farm:
                farm["regime"] = problem.regime
            entry["farm"] = farm
        units.append(entry)

    u_max_cfg = {}
    for j, u in enumerate(problem.units):
        col = problem.u_max[:, j]
        if not u.candidate and not col.any():
            continue
        u_max_cfg[u.id] = int(col[0]) if np.all(col == col[0]) else col.tolist()

    horizon = problem.horizon
    config = {
        "units": units,
        "horizon": {
            "stage_count": horizon.stage_count,
            "years_per_stage": horizon.years_per_stage,
            "lead_time_years": horizon.lead_time_years,
            "hours_per_year": horizon.hours_per_year,
            "peak_loads_mw": list(horizon.peak_loads_mw),
            "base_load_ratio": horizon.base_load_ratio,
            "ldc_breakpoint": list(horizon.ldc_breakpoint)
            if horizon.ldc_breakpoint else None,
        },
        "economics": {
            "discount_rate": problem.economics.discount_rate,
            "eens_cost_per_kwh": problem.economics.eens_cost_per_kwh,
        },
        "constraints": {
            "max_builds_per_stage": u_max_cfg,
            "fuel_mix": {cls: list(bounds)
                         for cls, bounds in problem.constraints.fuel_mix.items()},
            "reserve_min": problem.constraints.reserve_min,
            "reserve_max": problem.constraints.reserve_max,
            "lolp_max": problem.constraints.lolp_max,
            "capacity_grid_mw": problem.constraints.capacity_grid_mw,
            "prune_threshold": problem.constraints.prune_threshold,
        },
        "ga": {
            "population_size": problem.ga.population_size,
            "generations": problem.ga.generations,
            "crossover_fraction": problem.ga.crossover_fraction,
            "crossover_type_probs": list(problem.ga.crossover_type_probs),
            "mutants_per_generation": problem.ga.mutants_per_generation,
            "elite_count": problem.ga.elite_count,
            "penalty_weight": problem.ga.penalty_weight,
            "seed": problem.ga.seed,
            "runs": problem.ga.runs,
        },
    }
    if problem.wind_spec is not None:
        wind = dict(problem.wind_spec)
        if problem.regime is not None:
            wind["active_regime"] = problem.regime
        config["wind"] = wind
    return config


def config_digest(config: dict) -> str:
    """Stable hash of a config dict (canonical JSON, sorted keys)."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def problem_digest(problem: Problem) -> str:
    return config_digest(problem_to_config(problem))
