"""Discounted plan cost: investment, salvage, merit-order O&M, and shortfall cost."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ldc import LoadDurationCurve
from .problem import EconomicParams, ExpansionPlan, PlanningHorizon, Problem


def discount_to_base(amount: float, years: float, rate: float) -> float:
    """Present value at the decision base of a cash flow ``years`` out."""
    return amount * (1.0 + rate) ** (-years)


@lru_cache(maxsize=64)
def _factors(horizon: PlanningHorizon,
             econ: EconomicParams) -> tuple[np.ndarray, np.ndarray, float]:
    """Per-stage discounting: (investment factor, summed mid-year operating
    factor, end-of-horizon factor).

    Stage t (0-based) enters service lead + s*t years out; its investment is
    discounted from that point, each of its s operating years from mid-year,
    and all salvage from the common end of horizon.
    """
    rate = econ.discount_rate
    stages = np.arange(horizon.stage_count)
    offsets = horizon.lead_time_years + horizon.years_per_stage * stages
    invest = (1.0 + rate) ** (-offsets.astype(float))
    years = np.arange(horizon.years_per_stage)
    operating = ((1.0 + rate) **
                 -(offsets[:, None] + 0.5 + years[None, :])).sum(axis=1)
    end = (1.0 + rate) ** (-float(horizon.end_of_horizon_years))
    return invest, operating, float(end)


def _total_builds(problem: Problem, plan: ExpansionPlan) -> np.ndarray:
    # exogenous fixed additions are paid for and salvaged like planned ones
    return plan.builds + problem.fixed_builds


def investment_cost(problem: Problem, plan: ExpansionPlan, stage: int) -> float:
    """Present-valued investment for the units added at one stage (M$)."""
    invest, _, _ = _factors(problem.horizon, problem.economics)
    builds = _total_builds(problem, plan)[stage]
    outlay = builds @ (problem.capacities_mw * problem.invest_m_per_mw)
    return float(outlay * invest[stage])


def salvage_value(problem: Problem, plan: ExpansionPlan) -> float:
    """Present-valued residual worth of all additions at the end of horizon (M$)."""
    _, _, end = _factors(problem.horizon, problem.economics)
    builds = _total_builds(problem, plan)
    residual = builds.sum(axis=0) @ (problem.capacities_mw * problem.invest_m_per_mw
                                     * problem.salvage_factors)
    return float(residual * end)


def dispatch_energy(problem: Problem, installed_mw: np.ndarray,
                    curve: LoadDurationCurve) -> np.ndarray:
    """Annual energy (MWh) served by each type under merit-order loading.

    Types stack in ascending variable-cost order (ties broken by config
    order); each occupies a credited-capacity band of the load duration
    curve.  Wind is credited at its expected output, thermal at nameplate.
    """
    credited = installed_mw * problem.credit_factors
    order = problem.merit_order
    bounds = np.zeros(len(order) + 1)
    np.cumsum(credited[order], out=bounds[1:])
    integrals = curve.integrals_at(bounds)
    ees = np.empty(len(order))
    ees[order] = np.diff(integrals)
    return ees


def om_cost(problem: Problem, installed_mw: np.ndarray, ees: np.ndarray,
            stage: int) -> float:
    """Discounted fixed plus variable O&M for one stage (M$)."""
    _, operating, _ = _factors(problem.horizon, problem.economics)
    annual = (installed_mw @ problem.fixed_om_m_per_mw_year
              + ees @ problem.variable_om_m_per_mwh)
    return float(annual * operating[stage])


def eens_cost(problem: Problem, eens_mwh: float, stage: int) -> float:
    """Discounted cost of expected unserved energy for one stage (M$)."""
    _, operating, _ = _factors(problem.horizon, problem.economics)
    return float(problem.economics.eens_m_per_mwh * eens_mwh * operating[stage])


@dataclass(frozen=True, eq=False)
class CostBreakdown:
    """Discounted cost components of one plan, all in M$."""

    investment_by_stage: np.ndarray
    fixed_om_by_stage: np.ndarray
    variable_om_by_stage: np.ndarray
    eens_cost_by_stage: np.ndarray
    salvage_by_stage: np.ndarray
    eens_mwh_by_stage: np.ndarray
    ees_mwh: np.ndarray            # stage x type annual served energy

    @property
    def investment(self) -> float:
        return float(self.investment_by_stage.sum())

    @property
    def fixed_om(self) -> float:
        return float(self.fixed_om_by_stage.sum())

    @property
    def variable_om(self) -> float:
        return float(self.variable_om_by_stage.sum())

    @property
    def eens_cost(self) -> float:
        return float(self.eens_cost_by_stage.sum())

    @property
    def salvage(self) -> float:
        return float(self.salvage_by_stage.sum())

    @property
    def operational(self) -> float:
        """Operating-side cost: fixed + variable O&M + unserved energy."""
        return self.fixed_om + self.variable_om + self.eens_cost

    @property
    def total(self) -> float:
        return (self.investment + self.fixed_om + self.variable_om
                + self.eens_cost - self.salvage)


def build_breakdown(problem: Problem, plan: ExpansionPlan, installed_mw: np.ndarray,
                    ees_mwh: np.ndarray, eens_mwh: np.ndarray) -> CostBreakdown:
    """Assemble the discounted breakdown from per-stage physical results."""
    invest_f, operating_f, end_f = _factors(problem.horizon, problem.economics)
    builds = _total_builds(problem, plan)
    outlay_per_unit = problem.capacities_mw * problem.invest_m_per_mw
    investment = (builds @ outlay_per_unit) * invest_f
    salvage = (builds @ (outlay_per_unit * problem.salvage_factors)) * end_f
    fixed = (installed_mw @ problem.fixed_om_m_per_mw_year) * operating_f
    variable = (ees_mwh @ problem.variable_om_m_per_mwh) * operating_f
    eens_c = problem.economics.eens_m_per_mwh * eens_mwh * operating_f
    return CostBreakdown(
        investment_by_stage=investment,
        fixed_om_by_stage=fixed,
        variable_om_by_stage=variable,
        eens_cost_by_stage=eens_c,
        salvage_by_stage=salvage,
        eens_mwh_by_stage=np.asarray(eens_mwh, dtype=float),
        ees_mwh=np.asarray(ees_mwh, dtype=float),
    )
