"""Command-line front end: wind models, plan solves, and the two sweeps.

Exit codes: 0 success, 2 config error, 3 no feasible solution anywhere,
4 I/O error.  Set GEP_LOG=debug|info|warning|error for log verbosity.
All commands are deterministic for a given --seed.
"""

from __future__ import annotations

import functools
import json
import logging
import os
import sys
from pathlib import Path

import click

from . import artifacts, experiments
from .evaluate import evaluate_plan, fleet_outage_table
from .problem import (ConfigError, Problem, config_digest, load_problem,
                      power_curve_from_config, turbine_from_config)
from .wind import aggregate_farm, build_turbine_model, read_wind_series

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4

log = logging.getLogger("windgep")


def _setup_logging() -> None:
    level_name = os.environ.get("GEP_LOG", "warning").lower()
    levels = {"debug": logging.DEBUG, "info": logging.INFO,
              "warning": logging.WARNING, "error": logging.ERROR}
    if level_name not in levels:
        raise ConfigError(f"GEP_LOG must be one of {sorted(levels)}, "
                          f"got {level_name!r}")
    logging.basicConfig(level=levels[level_name],
                        format="%(levelname)s %(name)s: %(message)s")


def _guarded(fn):
    """Map domain errors to the documented exit codes."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            code = fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except ValueError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except OSError as exc:
            click.echo(f"i/o error: {exc}", err=True)
            sys.exit(EXIT_IO)
        if code:
            sys.exit(code)
    return wrapper


def _load_config(path: str) -> tuple[dict, str]:
    """The raw config dict and its canonical sha256."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return raw, config_digest(raw)


def _parse_int_list(text: str, what: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError as exc:
        raise ConfigError(f"{what}: expected comma-separated integers, "
                          f"got {text!r}") from exc


def _parse_float_list(text: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError as exc:
        raise ConfigError(f"{what}: expected comma-separated numbers, "
                          f"got {text!r}") from exc


def _common_options(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(), help="Problem config JSON.")(fn)
    fn = click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1),
                      default=None, help="Master seed (default: config ga.seed).")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(), default=None,
                      help="Output directory for result files.")(fn)
    return fn


def _search_options(fn):
    fn = click.option("--runs", type=click.IntRange(1), default=None,
                      help="Independent GA runs (default: config ga.runs).")(fn)
    fn = click.option("--threads", type=click.IntRange(1), default=1,
                      help="Worker processes (results are identical for any "
                           "value).")(fn)
    return fn


@click.group()
def main() -> None:
    """Generation expansion planning with probabilistic wind farm models."""
    try:
        _setup_logging()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


# --- wind-model ------------------------------------------------------------------

@main.command("wind-model")
@_common_options
@click.option("--regime", default=None,
              help="Wind regime tag (default: config wind.active_regime).")
@click.option("--series", "series_path", type=click.Path(), default=None,
              help="Wind speed CSV (timestamp,wind_speed_ms) to classify "
                   "instead of using configured regime probabilities.")
@click.option("--turbines", type=click.IntRange(1), default=None,
              help="Turbines per farm (default: config wind unit).")
@click.option("--for", "for_rate", type=click.FloatRange(0.0, 1.0, max_open=True),
              default=None, help="Turbine forced outage rate (default: config).")
@_guarded
def cmd_wind_model(config_path, seed, out_dir, regime, series_path, turbines,
                   for_rate) -> int:
    """Build the turbine and farm output models and write their level tables."""
    raw, digest = _load_config(config_path)
    wind_spec = raw.get("wind")
    if not wind_spec:
        raise ConfigError("config has no 'wind' section")

    farm_cfg = {}
    for unit in raw.get("units", ()):
        if unit.get("kind") == "wind" and unit.get("farm"):
            farm_cfg = unit["farm"]
            break
    n_turbines = turbines if turbines is not None else farm_cfg.get("turbines")
    rate = for_rate if for_rate is not None else farm_cfg.get("turbine_for_rate")
    if n_turbines is None or rate is None:
        raise ConfigError("no wind unit with a farm section in the config; "
                          "pass --turbines and --for")

    if series_path is not None:
        curve = power_curve_from_config(wind_spec)
        series = read_wind_series(series_path)
        levels = int(wind_spec["turbine"].get("output_levels", 6))
        turbine = build_turbine_model(curve, series, levels)
        regime_tag = f"series:{Path(series_path).name}"
    else:
        regime_tag = regime or farm_cfg.get("regime") \
            or wind_spec.get("active_regime")
        if regime_tag is None:
            raise ConfigError("no wind regime selected: pass --regime or set "
                              "wind.active_regime")
        turbine = turbine_from_config(wind_spec, regime_tag)

    farm = aggregate_farm(turbine, int(n_turbines), float(rate))
    seed_val = seed if seed is not None else raw.get("ga", {}).get("seed", 0)
    click.echo(f"turbine expected output: {turbine.expected_output:.4f} MW")
    click.echo(f"farm expected output:    {farm.expected_output:.4f} MW "
               f"({farm.nameplate:.0f} MW nameplate, "
               f"{int(n_turbines)} turbines, FOR {float(rate)})")
    if out_dir is not None:
        artifacts.write_wind_model_outputs(Path(out_dir), turbine, farm,
                                           regime_tag, seed_val, digest)
        click.echo(f"wrote turbine_model.csv, farm_model.csv, summary.json "
                   f"to {out_dir}")
    return EXIT_OK


# --- solve -----------------------------------------------------------------------

def _load_effective_problem(config_path: str, regime: str | None,
                            exclude_types: str | None) -> tuple[Problem, str]:
    raw, digest = _load_config(config_path)
    problem = load_problem(raw, regime=regime)
    if exclude_types:
        ids = tuple(tok.strip() for tok in exclude_types.split(",")
                    if tok.strip())
        problem = problem.with_excluded_types(ids)
    return problem, digest


@main.command("solve")
@_common_options
@_search_options
@click.option("--regime", default=None,
              help="Wind regime tag (default: config wind.active_regime).")
@click.option("--exclude-types", default=None,
              help="Comma-separated type ids to drop from the candidate set.")
@_guarded
def cmd_solve(config_path, seed, out_dir, runs, threads, regime,
              exclude_types) -> int:
    """Search for the least-cost feasible expansion plan."""
    problem, digest = _load_effective_problem(config_path, regime,
                                              exclude_types)
    result = experiments.solve(problem, seed=seed, runs=runs, threads=threads)
    ev = result.evaluation
    click.echo(f"best plan: total {ev.breakdown.total:.2f} M$ "
               f"(investment {ev.breakdown.investment:.2f}, operating "
               f"{ev.breakdown.operational:.2f}, salvage "
               f"{ev.breakdown.salvage:.2f}), feasible={ev.feasible}")
    for t in range(problem.horizon.stage_count):
        row = "  ".join(f"{u.id}={int(c)}" for u, c in
                        zip(problem.units, result.plan.builds[t]))
        click.echo(f"  stage {t + 1}: {row}")
    if out_dir is not None:
        artifacts.write_solve_outputs(Path(out_dir), result, digest)
        click.echo(f"wrote plan.csv, breakdown.json, feasibility.json, "
                   f"history.csv, manifest.json to {out_dir}")
    if not result.feasible:
        click.echo("no feasible plan found in any run", err=True)
        return EXIT_INFEASIBLE
    return EXIT_OK


# --- evaluate --------------------------------------------------------------------

@main.command("evaluate")
@_common_options
@click.option("--plan", "plan_path", required=True, type=click.Path(),
              help="Plan CSV (stage column plus one column per type).")
@click.option("--regime", default=None,
              help="Wind regime tag (default: config wind.active_regime).")
@click.option("--copt", "copt_path", type=click.Path(), default=None,
              help="Also write the final-stage fleet outage table CSV here.")
@_guarded
def cmd_evaluate(config_path, seed, out_dir, plan_path, regime,
                 copt_path) -> int:
    """Score one plan without searching: costs, reliability, violations."""
    raw, digest = _load_config(config_path)
    problem = load_problem(raw, regime=regime)
    plan = artifacts.read_plan_csv(plan_path, problem)
    evaluation = evaluate_plan(problem, plan)
    seed_val = seed if seed is not None else problem.ga.seed

    br = evaluation.breakdown
    click.echo(f"total {br.total:.2f} M$ (investment {br.investment:.2f}, "
               f"operating {br.operational:.2f}, salvage {br.salvage:.2f}), "
               f"feasible={evaluation.feasible}")
    for rec in evaluation.report.records:
        if rec.violation > 0.0:
            subject = f" {rec.subject}" if rec.subject else ""
            click.echo(f"  violated: {rec.kind}{subject} at stage {rec.stage} "
                       f"(measured {rec.measured:.6g}, bounds "
                       f"[{rec.bound_low}, {rec.bound_high}])")
    if out_dir is not None:
        artifacts.write_evaluate_outputs(Path(out_dir), problem, evaluation,
                                         seed_val, digest)
        click.echo(f"wrote plan.csv, breakdown.json, feasibility.json, "
                   f"manifest.json to {out_dir}")
    if copt_path is not None:
        counts = problem.cumulative_counts(plan)[-1]
        table = fleet_outage_table(problem, counts)
        artifacts.write_copt_csv(Path(copt_path), table, seed_val, digest)
        click.echo(f"wrote final-stage outage table to {copt_path}")
    return EXIT_OK if evaluation.feasible else EXIT_INFEASIBLE


# --- sweeps ----------------------------------------------------------------------

def _echo_sweep(result, problems) -> None:
    for problem, point in zip(problems, result.points):
        violated = point.first_violation
        mark = "ok " if point.feasible else (
            f"VIOLATED {violated[0]} at stage {violated[1]}" if violated
            else "infeasible")
        click.echo(f"  {point.value:>8g}: total {point.total_cost:10.2f} M$  "
                   f"operating {point.operational_cost:10.2f} M$  "
                   f"penetration {point.penetration_pct(problem):5.1f}%  {mark}")


@main.command("sweep-penetration")
@_common_options
@_search_options
@click.option("--regime", default=None,
              help="Wind regime tag (default: config wind.active_regime).")
@click.option("--farms", default="0,2,4,6,8,10,12,14", show_default=True,
              help="Comma-separated wind farms fixed per stage, one sweep "
                   "point each.")
@_guarded
def cmd_sweep_penetration(config_path, seed, out_dir, runs, threads, regime,
                          farms) -> int:
    """Fix w wind farms per stage for each w; solve the thermal complement."""
    raw, digest = _load_config(config_path)
    problem = load_problem(raw, regime=regime)
    if runs is not None:
        problem = problem.with_ga(runs=int(runs))
    counts = _parse_int_list(farms, "--farms")
    result = experiments.penetration_sweep(problem, counts,
                                           regime=problem.regime, seed=seed,
                                           threads=threads)
    click.echo(f"penetration sweep, regime {problem.regime}:")
    _echo_sweep(result, result.problems)
    first = result.first_lolp_violation()
    if first is not None:
        click.echo(f"first LOLP violation at w={int(first[0])} "
                   f"(stage {first[1]})")
    if out_dir is not None:
        artifacts.write_sweep_outputs(Path(out_dir), result, digest)
        click.echo(f"wrote sweep.csv, lolp.csv, plans/, manifest.json "
                   f"to {out_dir}")
    if not any(p.feasible for p in result.points):
        click.echo("no sweep point has a feasible solution", err=True)
        return EXIT_INFEASIBLE
    return EXIT_OK


@main.command("sweep-investment")
@_common_options
@_search_options
@click.option("--regime", default=None,
              help="Wind regime tag (default: config wind.active_regime).")
@click.option("--costs", default="1650,1575,1485,1402,1320", show_default=True,
              help="Comma-separated wind investment costs ($/kW), one sweep "
                   "point each.")
@_guarded
def cmd_sweep_investment(config_path, seed, out_dir, runs, threads, regime,
                         costs) -> int:
    """Re-solve with wind selectable at each wind investment cost."""
    raw, digest = _load_config(config_path)
    problem = load_problem(raw, regime=regime)
    if runs is not None:
        problem = problem.with_ga(runs=int(runs))
    values = _parse_float_list(costs, "--costs")
    result = experiments.investment_sweep(problem, values,
                                          regime=problem.regime, seed=seed,
                                          threads=threads)
    click.echo(f"investment sweep, regime {problem.regime}:")
    _echo_sweep(result, result.problems)
    if out_dir is not None:
        artifacts.write_sweep_outputs(Path(out_dir), result, digest)
        click.echo(f"wrote sweep.csv, lolp.csv, plans/, manifest.json "
                   f"to {out_dir}")
    if not any(p.feasible for p in result.points):
        click.echo("no sweep point has a feasible solution", err=True)
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    main()
