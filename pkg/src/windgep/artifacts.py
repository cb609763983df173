"""Deterministic result files: CSV tables plus a JSON manifest per command.

Every file starts with (or contains) the master seed and the sha256 of the
input config, and contains nothing volatile -- no timestamps, hostnames, or
worker counts -- so identical invocations produce identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .copt import OutageTable
from .evaluate import PlanEvaluation
from .experiments import ExperimentResult, SolveResult
from .ga import GARunResult
from .problem import ConfigError, ExpansionPlan, Problem
from .wind import FarmOutputModel, TurbineOutputModel


def _header(seed: int, digest: str) -> str:
    return f"# seed={int(seed)} config_sha256={digest}\n"


def _fmt(value: float) -> str:
    return repr(float(value))


def _dump_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# --- plan matrices -------------------------------------------------------------

def write_plan_csv(path: Path, problem: Problem, plan: ExpansionPlan,
                   seed: int, digest: str) -> None:
    """Unit counts added per stage, one column per type (all types, in order)."""
    lines = [_header(seed, digest),
             "stage," + ",".join(u.id for u in problem.units) + "\n"]
    for t in range(problem.horizon.stage_count):
        row = ",".join(str(int(c)) for c in plan.builds[t])
        lines.append(f"{t + 1},{row}\n")
    path.write_text("".join(lines))


def read_plan_csv(path: str | Path, problem: Problem) -> ExpansionPlan:
    """Parse a plan matrix, validating the type columns against the problem."""
    rows = []
    header = None
    try:
        text = Path(path).read_text()
    except OSError:
        raise
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append(line.split(","))
    if header is None:
        raise ConfigError(f"{path}: no header row found")
    expected = ["stage"] + [u.id for u in problem.units]
    if header != expected:
        raise ConfigError(f"{path}: columns {header} do not match the "
                          f"problem's types {expected}")
    if len(rows) != problem.horizon.stage_count:
        raise ConfigError(f"{path}: {len(rows)} stage rows for a "
                          f"{problem.horizon.stage_count}-stage horizon")
    builds = np.zeros((problem.horizon.stage_count, len(problem.units)),
                      dtype=np.int64)
    for row in rows:
        try:
            stage = int(row[0])
            counts = [int(c) for c in row[1:]]
        except ValueError as exc:
            raise ConfigError(f"{path}: non-integer entry in row {row}") from exc
        if not (1 <= stage <= problem.horizon.stage_count):
            raise ConfigError(f"{path}: stage {stage} out of range")
        if len(counts) != len(problem.units):
            raise ConfigError(f"{path}: row for stage {stage} has "
                              f"{len(counts)} columns")
        builds[stage - 1] = counts
    return ExpansionPlan(builds)


# --- evaluation artifacts ------------------------------------------------------

def breakdown_payload(evaluation: PlanEvaluation, seed: int, digest: str) -> dict:
    """Pure-evaluation cost and reliability summary (no GA state)."""
    br = evaluation.breakdown
    return {
        "seed": int(seed),
        "config_sha256": digest,
        "feasible": evaluation.feasible,
        "total_cost_musd": br.total,
        "investment_musd": br.investment,
        "salvage_musd": br.salvage,
        "fixed_om_musd": br.fixed_om,
        "variable_om_musd": br.variable_om,
        "eens_cost_musd": br.eens_cost,
        "operational_cost_musd": br.operational,
        "cost_by_stage_musd": {
            "investment": list(br.investment_by_stage),
            "fixed_om": list(br.fixed_om_by_stage),
            "variable_om": list(br.variable_om_by_stage),
            "eens": list(br.eens_cost_by_stage),
            "salvage": list(br.salvage_by_stage),
        },
        "eens_mwh_by_stage": list(br.eens_mwh_by_stage),
        "lolp_by_stage": list(evaluation.lolp_by_stage),
        "reserve_margin_by_stage": list(evaluation.reserve_margins),
    }


def feasibility_payload(evaluation: PlanEvaluation, seed: int,
                        digest: str) -> dict:
    report = evaluation.report
    return {
        "seed": int(seed),
        "config_sha256": digest,
        "feasible": report.feasible,
        "violation_count": report.violation_count,
        "records": [
            {"kind": r.kind, "stage": r.stage, "subject": r.subject,
             "measured": r.measured, "bound_low": r.bound_low,
             "bound_high": r.bound_high, "violation": r.violation}
            for r in report.records
        ],
    }


def write_history_csv(path: Path, run: GARunResult, seed: int,
                      digest: str) -> None:
    lines = [_header(seed, digest), "generation,best_fitness,mean_fitness\n"]
    for gen, (best, mean) in enumerate(run.history):
        lines.append(f"{gen},{_fmt(best)},{_fmt(mean)}\n")
    path.write_text("".join(lines))


def write_copt_csv(path: Path, table: OutageTable, seed: int,
                   digest: str) -> None:
    """Fleet availability distribution as `available_mw,probability` rows."""
    lines = [_header(seed, digest), "available_mw,probability\n"]
    for mw, prob in zip(table.capacities, table.probs):
        if prob > 0.0:
            lines.append(f"{_fmt(mw)},{_fmt(prob)}\n")
    path.write_text("".join(lines))


def write_levels_csv(path: Path, model: TurbineOutputModel | FarmOutputModel,
                     seed: int, digest: str) -> None:
    """Output-level distribution as `power_mw,probability` rows."""
    lines = [_header(seed, digest), "power_mw,probability\n"]
    for mw, prob in zip(model.powers, model.probs):
        lines.append(f"{_fmt(mw)},{_fmt(prob)}\n")
    path.write_text("".join(lines))


# --- command output bundles ----------------------------------------------------

def write_evaluation_outputs(outdir: Path, problem: Problem,
                             evaluation: PlanEvaluation, seed: int,
                             digest: str) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    write_plan_csv(outdir / "plan.csv", problem, evaluation.plan, seed, digest)
    _dump_json(outdir / "breakdown.json",
               breakdown_payload(evaluation, seed, digest))
    _dump_json(outdir / "feasibility.json",
               feasibility_payload(evaluation, seed, digest))
    return {"plan": "plan.csv", "breakdown": "breakdown.json",
            "feasibility": "feasibility.json"}


def write_evaluate_outputs(outdir: Path, problem: Problem,
                           evaluation: PlanEvaluation, seed: int,
                           digest: str) -> dict:
    """Evaluation trio plus a manifest, for scoring a plan without a search."""
    outdir = Path(outdir)
    files = write_evaluation_outputs(outdir, problem, evaluation, seed, digest)
    manifest = {
        "command": "evaluate",
        "seed": int(seed),
        "config_sha256": digest,
        "regime": problem.regime,
        "feasible": evaluation.feasible,
        "total_cost_musd": evaluation.breakdown.total,
        "files": files,
    }
    _dump_json(outdir / "manifest.json", manifest)
    return manifest


def write_solve_outputs(outdir: Path, result: SolveResult, digest: str) -> dict:
    outdir = Path(outdir)
    files = write_evaluation_outputs(outdir, result.problem, result.evaluation,
                                     result.seed, digest)
    write_history_csv(outdir / "history.csv", result.result.best, result.seed,
                      digest)
    files["history"] = "history.csv"
    manifest = {
        "command": "solve",
        "seed": result.seed,
        "config_sha256": digest,
        "regime": result.problem.regime,
        "feasible": result.feasible,
        "total_cost_musd": result.evaluation.breakdown.total,
        "best_run_seed": result.result.best.seed,
        "runs": [
            {"seed": run.seed, "fitness": run.fitness,
             "feasible": run.feasible, "feasible_found": run.feasible_found}
            for run in result.result.runs
        ],
        "files": files,
    }
    _dump_json(outdir / "manifest.json", manifest)
    return manifest


def _point_label(result: ExperimentResult, value: float) -> str:
    if result.spec.mode == "penetration":
        return f"w{int(value):02d}"
    return f"ci{int(round(value))}"


def write_sweep_outputs(outdir: Path, result: ExperimentResult,
                        digest: str) -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    plans_dir = outdir / "plans"
    plans_dir.mkdir(exist_ok=True)
    mode = result.spec.mode
    stages = result.problems[0].horizon.stage_count

    value_col = ("farms_per_stage" if mode == "penetration" else "cost_per_kw")
    sweep_lines = [_header(result.seed, digest),
                   f"{value_col},penetration_pct,wind_units_total,feasible,"
                   f"total_cost_musd,operational_cost_musd,investment_net_musd,"
                   f"worst_lolp,violated_constraint,violated_stage,point_seed\n"]
    lolp_lines = [_header(result.seed, digest),
                  value_col + ","
                  + ",".join(f"stage{t + 1}" for t in range(stages)) + "\n"]
    manifest_points = []
    for problem, point in zip(result.problems, result.points):
        label = _point_label(result, point.value)
        value_txt = (str(int(point.value)) if mode == "penetration"
                     else _fmt(point.value))
        br = point.evaluation.breakdown
        violated = point.first_violation
        wind_units = int(point.wind_units_by_stage(problem).sum())
        sweep_lines.append(
            f"{value_txt},{_fmt(point.penetration_pct(problem))},{wind_units},"
            f"{int(point.feasible)},{_fmt(br.total)},{_fmt(br.operational)},"
            f"{_fmt(br.investment - br.salvage)},"
            f"{_fmt(max(point.lolp_by_stage))},"
            f"{violated[0] if violated else ''},"
            f"{violated[1] if violated else ''},{point.seed}\n")
        lolp_lines.append(value_txt + ","
                          + ",".join(_fmt(v) for v in point.lolp_by_stage)
                          + "\n")
        plan_file = f"plans/plan_{label}.csv"
        write_plan_csv(outdir / plan_file, problem, point.plan, point.seed,
                       digest)
        manifest_points.append({
            "value": point.value,
            "label": label,
            "seed": point.seed,
            "feasible": point.feasible,
            "total_cost_musd": br.total,
            "operational_cost_musd": br.operational,
            "wind_units_total": wind_units,
            "penetration_pct": point.penetration_pct(problem),
            "first_violation": (
                {"kind": violated[0], "stage": violated[1],
                 "subject": violated[2]} if violated else None),
            "plan_file": plan_file,
        })
    (outdir / "sweep.csv").write_text("".join(sweep_lines))
    (outdir / "lolp.csv").write_text("".join(lolp_lines))

    first_lolp = result.first_lolp_violation()
    manifest = {
        "command": f"sweep-{mode}",
        "mode": mode,
        "seed": result.seed,
        "config_sha256": digest,
        "regime": result.spec.regime or result.problems[0].regime,
        "values": list(result.spec.values),
        "max_feasible_value": result.max_feasible_value(),
        "first_lolp_violation": (
            {"value": first_lolp[0], "stage": first_lolp[1]}
            if first_lolp else None),
        "points": manifest_points,
        "files": {"sweep": "sweep.csv", "lolp": "lolp.csv"},
    }
    _dump_json(outdir / "manifest.json", manifest)
    return manifest


def write_wind_model_outputs(outdir: Path, turbine: TurbineOutputModel,
                             farm: FarmOutputModel, regime: str,
                             seed: int, digest: str) -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_levels_csv(outdir / "turbine_model.csv", turbine, seed, digest)
    write_levels_csv(outdir / "farm_model.csv", farm, seed, digest)
    manifest = {
        "command": "wind-model",
        "seed": int(seed),
        "config_sha256": digest,
        "regime": regime,
        "turbine": {
            "rated_power_mw": turbine.rated_power,
            "expected_output_mw": turbine.expected_output,
            "levels": len(turbine.powers),
        },
        "farm": {
            "turbines": farm.turbine_count,
            "turbine_for_rate": farm.for_rate,
            "nameplate_mw": farm.nameplate,
            "expected_output_mw": farm.expected_output,
        },
        "files": {"turbine_model": "turbine_model.csv",
                  "farm_model": "farm_model.csv"},
    }
    _dump_json(outdir / "summary.json", manifest)
    return manifest
