"""Plan evaluation: fleet adequacy via cached convolution, costs, and feasibility."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import constraints as cons
from .copt import _chain_kernel
from .costs import CostBreakdown, build_breakdown, dispatch_energy
from .problem import ExpansionPlan, Problem


class StageCache:
    """Memo of adequacy results keyed by cumulative fleet composition.

    Outage vectors are built by a canonical recursion: the vector for a fleet
    is the vector of its immediate parent (one unit of the lowest expanded
    type index removed) convolved with that unit.  Every cached value is
    therefore a pure function of the composition -- independent of
    evaluation order, cache history, and thread count -- so caches can be
    shared across runs and sweep points without changing results.

    Vectors are stored as (offset, band) pairs holding only the window of
    capacities with probability above the pruning floor.
    """

    def __init__(self, problem: Problem, max_vectors: int = 20_000,
                 max_scalars: int = 400_000) -> None:
        self.problem = problem
        self.step = problem.grid_step_mw
        self.prune = problem.constraints.prune_threshold
        self._shifts = np.rint(problem.capacities_mw / self.step).astype(np.int64)
        self._for_rates = np.array([u.for_rate for u in problem.units])
        for j, unit in enumerate(problem.units):
            # farm levels snap to the grid by design; two-state capacities
            # must sit on it exactly or the outage table drifts from the
            # megawatts used for reserve margins (inactive types never enter
            # a fleet, so their capacities need not fit the grid)
            if problem.active_mask[j] and unit.farm_model is None and abs(
                    self._shifts[j] * self.step - problem.capacities_mw[j]
            ) > 1e-9 * max(problem.capacities_mw[j], self.step):
                raise ValueError(
                    f"unit {unit.id}: capacity {problem.capacities_mw[j]} MW "
                    f"is not a multiple of the {self.step} MW capacity grid; "
                    f"use a finer capacity_grid_mw")
        n_types = len(problem.units)
        max_levels = max((len(u.farm_model.probs) for u in problem.units
                          if u.farm_model is not None), default=1)
        self._level_counts = np.zeros(n_types, dtype=np.int64)
        self._level_shifts = np.zeros((n_types, max_levels), dtype=np.int64)
        self._level_probs = np.zeros((n_types, max_levels))
        for j, unit in enumerate(problem.units):
            if unit.farm_model is not None:
                shifts = np.rint(unit.farm_model.powers / self.step).astype(np.int64)
                if problem.active_mask[j] and np.any(np.diff(shifts) <= 0):
                    raise ValueError(
                        f"unit {unit.id}: farm output levels collide on the "
                        f"{self.step} MW capacity grid; use a finer "
                        f"capacity_grid_mw")
                m = len(shifts)
                self._level_counts[j] = m
                self._level_shifts[j, :m] = shifts
                self._level_probs[j, :m] = unit.farm_model.probs
        self._bands: OrderedDict[bytes, tuple[int, np.ndarray]] = OrderedDict()
        self._scalars: OrderedDict[tuple, tuple] = OrderedDict()
        self.max_vectors = max_vectors
        self.max_scalars = max_scalars
        self._existing = problem.existing_counts
        self._base_entry: tuple[int, np.ndarray] | None = None
        # duration / shortfall-energy lookups on the capacity grid, per stage
        max_steps = int((problem.existing_counts + problem.u_max.sum(axis=0)
                         + problem.fixed_builds.sum(axis=0)) @ self._shifts) + 1
        self._grid_size = 0
        self._size_grid(max_steps)

    def _size_grid(self, n_steps: int) -> None:
        """(Re)build the per-stage lookup tables to cover n_steps grid points."""
        if n_steps <= self._grid_size:
            return
        grid = np.arange(n_steps) * self.step
        self._durations = [ldc.duration_at(grid) / ldc.hours
                           for ldc in self.problem.horizon.ldcs]
        self._shortfall = [ldc.energy_above(grid) for ldc in self.problem.horizon.ldcs]
        self._grid_size = n_steps

    def _replay(self, entry: tuple[int, np.ndarray],
                steps: list) -> tuple[int, np.ndarray]:
        """Convolve a canonical sequence of unit types onto a banded vector."""
        lo, band = entry
        band, lo = _chain_kernel(band, lo, np.array(steps, dtype=np.int64),
                                 self._shifts, self._for_rates,
                                 self._level_counts, self._level_shifts,
                                 self._level_probs, self.prune)
        band.setflags(write=False)
        return int(lo), band

    def _base(self) -> tuple[int, np.ndarray]:
        if self._base_entry is None:
            steps = [j for j, count in enumerate(self._existing)
                     for _ in range(int(count))]
            self._base_entry = self._replay((0, np.array([1.0])), steps)
        return self._base_entry

    def banded_vector(self, counts: np.ndarray) -> tuple[int, np.ndarray]:
        """(offset, band) capacity-probability vector for one composition.

        A composition's vector is built by replaying units onto the nearest
        cached ancestor along a canonical path: strip one unit of the lowest
        expanded type index at a time.  Any cached ancestor lies on that
        path, so the result is a pure function of the composition no matter
        what the cache holds.  Later columns sit closest to the path's base;
        keeping the most variable type (a wind farm column) last therefore
        maximizes ancestor sharing.
        """
        key = counts.tobytes()
        entry = self._bands.get(key)
        if entry is not None:
            self._bands.move_to_end(key)
            return entry
        pending = []
        probe = counts.copy()
        entry = None
        for j in range(len(probe)):
            while probe[j] > self._existing[j]:
                pending.append(j)
                probe[j] -= 1
                entry = self._bands.get(probe.tobytes())
                if entry is not None:
                    self._bands.move_to_end(probe.tobytes())
                    break
            if entry is not None:
                break
        if entry is None:
            entry = self._base()
        entry = self._replay(entry, pending[::-1])
        self._bands[key] = entry
        if len(self._bands) > self.max_vectors:
            self._bands.popitem(last=False)
        return entry

    def vector(self, counts: np.ndarray) -> np.ndarray:
        """Dense available-capacity probability vector for one composition."""
        lo, band = self.banded_vector(counts)
        vec = np.zeros(lo + len(band))
        vec[lo:] = band
        return vec

    def adequacy(self, stage: int, counts: np.ndarray) -> tuple:
        """(lolp, eens_mwh, ees_mwh_by_type) for one fleet at one stage."""
        key = (stage, counts.tobytes())
        hit = self._scalars.get(key)
        if hit is not None:
            self._scalars.move_to_end(key)
            return hit
        lo, band = self.banded_vector(counts)
        n = lo + len(band)
        if n > self._grid_size:
            self._size_grid(n)
        lolp = float(band @ self._durations[stage][lo:n])
        eens = float(band @ self._shortfall[stage][lo:n])
        ees = dispatch_energy(self.problem, counts * self.problem.capacities_mw,
                              self.problem.horizon.ldcs[stage])
        result = (lolp, eens, ees)
        self._scalars[key] = result
        if len(self._scalars) > self.max_scalars:
            self._scalars.popitem(last=False)
        return result


def fleet_outage_table(problem: Problem, counts: np.ndarray,
                       cache: StageCache | None = None):
    """The cached fleet outage distribution, as a public OutageTable."""
    from .copt import OutageTable

    cache = cache or StageCache(problem)
    vec = cache.vector(np.asarray(counts, dtype=np.int64))
    return OutageTable(cache.step, vec, cache.prune)


@dataclass(frozen=True, eq=False)
class PlanEvaluation:
    """Costs, adequacy, and constraint outcomes of one plan.

    ``total_normalized`` aggregates all normalized violation magnitudes; the
    plan is feasible exactly when it is zero.  The record-level report is
    materialized lazily from the same underlying arrays.
    """

    problem: Problem = field(repr=False)
    plan: ExpansionPlan
    breakdown: CostBreakdown
    lolp_by_stage: np.ndarray
    reserve_margins: np.ndarray
    total_normalized: float

    @property
    def feasible(self) -> bool:
        return self.total_normalized == 0.0

    @property
    def total_cost(self) -> float:
        return self.breakdown.total

    @cached_property
    def report(self) -> cons.FeasibilityReport:
        counts = self.problem.cumulative_counts(self.plan)
        installed = counts * self.problem.capacities_mw[np.newaxis, :]
        return cons.build_report(self.problem, self.plan, installed,
                                 self.lolp_by_stage)


def evaluate_plan(problem: Problem, plan: ExpansionPlan,
                  cache: StageCache | None = None) -> PlanEvaluation:
    """Evaluate cost breakdown and feasibility of one plan.

    With or without a shared cache the numbers are identical: cached values
    are canonical functions of fleet composition.
    """
    if cache is None:
        cache = StageCache(problem)
    elif cache.problem is not problem \
            and cache.problem.adequacy_digest != problem.adequacy_digest:
        raise ValueError("cache was built for a problem with different "
                         "adequacy-relevant data")
    counts = problem.cumulative_counts(plan)
    stage_count, n_types = counts.shape
    lolps = np.empty(stage_count)
    eens = np.empty(stage_count)
    ees = np.empty((stage_count, n_types))
    for t in range(stage_count):
        lolps[t], eens[t], ees[t] = cache.adequacy(t, counts[t])
    installed = counts * problem.capacities_mw[np.newaxis, :]
    breakdown = build_breakdown(problem, plan, installed, ees, eens)
    arrays = cons.violation_arrays(problem, plan, installed, lolps)
    return PlanEvaluation(problem=problem, plan=plan, breakdown=breakdown,
                          lolp_by_stage=lolps,
                          reserve_margins=arrays["reserve_margins"],
                          total_normalized=arrays["total_normalized"])


def total_objective(problem: Problem, plan: ExpansionPlan,
                    cache: StageCache | None = None) -> CostBreakdown:
    """Discounted total cost breakdown of a plan."""
    return evaluate_plan(problem, plan, cache).breakdown


def evaluate_feasibility(problem: Problem, plan: ExpansionPlan,
                         cache: StageCache | None = None) -> cons.FeasibilityReport:
    """Constraint report for a plan."""
    return evaluate_plan(problem, plan, cache).report
