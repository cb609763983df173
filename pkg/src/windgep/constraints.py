"""Per-stage plan feasibility checks: build caps, fuel mix, reserve band, LOLP."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import ExpansionPlan, Problem


@dataclass(frozen=True)
class ConstraintRecord:
    """One constraint evaluation at one stage.

    ``violation`` is the raw exceedance in the constraint's natural unit
    (units, capacity share, MW, probability); ``normalized`` is the
    dimensionless magnitude used for penalties (units, share, MW per MW of
    peak load, fraction of the LOLP cap).  Both are 0 when satisfied.
    """

    kind: str          # build_limit | fuel_mix | reserve | lolp
    stage: int         # 1-based, as reported
    subject: str       # offending type id / fuel class, "" for fleet-wide checks
    measured: float
    bound_low: float | None
    bound_high: float | None
    violation: float
    normalized: float


@dataclass(frozen=True)
class FeasibilityReport:
    """All constraint evaluations for a plan, in stage order."""

    records: tuple[ConstraintRecord, ...]
    reserve_margins: tuple[float, ...]   # per stage, (capacity - peak) / peak
    lolp_by_stage: tuple[float, ...]

    @property
    def feasible(self) -> bool:
        return all(r.violation == 0.0 for r in self.records)

    @property
    def violation_count(self) -> int:
        return sum(1 for r in self.records if r.violation > 0.0)

    @property
    def total_normalized(self) -> float:
        return float(sum(r.normalized for r in self.records))

    def worst(self) -> ConstraintRecord | None:
        offending = [r for r in self.records if r.violation > 0.0]
        return max(offending, key=lambda r: r.normalized) if offending else None


# --- vectorized violation arrays (search hot path) ---------------------------

def violation_arrays(problem: Problem, plan: ExpansionPlan,
                     installed_mw: np.ndarray, lolps: np.ndarray) -> dict:
    """All per-stage violation magnitudes as arrays, plus their normalized sum.

    The record-building checks below derive from these same arrays, so the
    fast path and the report path cannot drift apart.
    """
    build_excess = np.maximum(plan.builds - problem.u_max, 0)
    totals = installed_mw.sum(axis=1)
    mix = problem.constraints.fuel_mix
    if mix:
        if np.any(totals <= 0.0):
            stage = int(np.argmax(totals <= 0.0))
            raise ValueError(f"stage {stage + 1}: fleet has zero installed capacity")
        shares = (installed_mw @ problem.mix_class_matrix.T) / totals[:, None]
        lo = np.array([b[0] for b in mix.values()])
        hi = np.array([b[1] for b in mix.values()])
        fuel_viol = np.maximum(np.maximum(lo - shares, shares - hi), 0.0)
    else:
        shares = np.zeros((len(totals), 0))
        fuel_viol = shares
    peaks = np.asarray(problem.horizon.peak_loads_mw)
    res_lo = (1.0 + problem.constraints.reserve_min) * peaks
    res_hi = (1.0 + problem.constraints.reserve_max) * peaks
    reserve_viol = np.maximum(np.maximum(res_lo - totals, totals - res_hi), 0.0)
    margins = (totals - peaks) / peaks
    lolp_viol = np.maximum(np.asarray(lolps) - problem.constraints.lolp_max, 0.0)
    normalized = (float(build_excess.sum()) + float(fuel_viol.sum())
                  + float((reserve_viol / peaks).sum())
                  + float(lolp_viol.sum()) / problem.constraints.lolp_max)
    return {
        "build_excess": build_excess,
        "shares": shares,
        "fuel_violation": fuel_viol,
        "reserve_violation": reserve_viol,
        "reserve_margins": margins,
        "lolp_violation": lolp_viol,
        "totals": totals,
        "total_normalized": normalized,
    }


# --- record-level checks ------------------------------------------------------

def check_build_limits(problem: Problem, plan: ExpansionPlan) -> list[ConstraintRecord]:
    """Per-stage build caps; one record per offending (stage, type)."""
    records = []
    excess = plan.builds - problem.u_max
    for t, j in zip(*np.nonzero(excess > 0)):
        records.append(ConstraintRecord(
            kind="build_limit", stage=int(t) + 1, subject=problem.units[j].id,
            measured=float(plan.builds[t, j]), bound_low=None,
            bound_high=float(problem.u_max[t, j]),
            violation=float(excess[t, j]), normalized=float(excess[t, j])))
    return records


def check_fuel_mix(problem: Problem, installed_mw: np.ndarray,
                   stage: int) -> list[ConstraintRecord]:
    """Nameplate share bounds per fuel class at one stage (0-based input)."""
    total = float(installed_mw.sum())
    if total <= 0.0:
        raise ValueError(f"stage {stage + 1}: fleet has zero installed capacity")
    records = []
    for cls, (lo, hi) in problem.constraints.fuel_mix.items():
        share = float(installed_mw @ problem.mix_class_matrix[
            problem.mix_class_index[cls]]) / total
        violation = max(lo - share, share - hi, 0.0)
        records.append(ConstraintRecord(
            kind="fuel_mix", stage=stage + 1, subject=cls, measured=share,
            bound_low=lo, bound_high=hi, violation=violation,
            normalized=violation))
    return records


def check_reserve(problem: Problem, installed_total_mw: float,
                  stage: int) -> ConstraintRecord:
    """Installed nameplate must lie within the reserve band around peak load."""
    peak = problem.horizon.peak_loads_mw[stage]
    lo = (1.0 + problem.constraints.reserve_min) * peak
    hi = (1.0 + problem.constraints.reserve_max) * peak
    violation = max(lo - installed_total_mw, installed_total_mw - hi, 0.0)
    return ConstraintRecord(
        kind="reserve", stage=stage + 1, subject="",
        measured=(installed_total_mw - peak) / peak,
        bound_low=problem.constraints.reserve_min,
        bound_high=problem.constraints.reserve_max,
        violation=violation, normalized=violation / peak)


def check_lolp(problem: Problem, lolp_value: float, stage: int) -> ConstraintRecord:
    """Annual loss-of-load probability cap at one stage."""
    cap = problem.constraints.lolp_max
    violation = max(lolp_value - cap, 0.0)
    return ConstraintRecord(
        kind="lolp", stage=stage + 1, subject="", measured=lolp_value,
        bound_low=None, bound_high=cap, violation=violation,
        normalized=violation / cap)


def build_report(problem: Problem, plan: ExpansionPlan, installed_mw: np.ndarray,
                 lolps: np.ndarray) -> FeasibilityReport:
    """Full record-level report; numbers match ``violation_arrays`` by shared math."""
    records = list(check_build_limits(problem, plan))
    margins = []
    for t in range(problem.stage_count):
        records.extend(check_fuel_mix(problem, installed_mw[t], t))
        reserve = check_reserve(problem, float(installed_mw[t].sum()), t)
        records.append(reserve)
        margins.append(reserve.measured)
        records.append(check_lolp(problem, float(lolps[t]), t))
    return FeasibilityReport(tuple(records), tuple(margins),
                             tuple(float(v) for v in lolps))
