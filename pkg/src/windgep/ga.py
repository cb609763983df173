"""Integer-coded genetic search over staged expansion plans."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .constraints import FeasibilityReport
from .evaluate import PlanEvaluation, StageCache, evaluate_plan
from .problem import ExpansionPlan, GAConfig, Problem


def plan_to_genes(problem: Problem, plan: ExpansionPlan) -> np.ndarray:
    """Flatten the candidate-type columns of a plan into a gene vector."""
    return plan.builds[:, problem.candidate_columns].ravel()


def genes_to_plan(problem: Problem, genes: np.ndarray) -> ExpansionPlan:
    return ExpansionPlan(_genes_to_builds(problem, genes))


def _genes_to_builds(problem: Problem, genes: np.ndarray) -> np.ndarray:
    builds = np.zeros((problem.stage_count, problem.n_types), dtype=np.int64)
    builds[:, problem.candidate_columns] = genes.reshape(problem.stage_count, -1)
    return builds


def default_penalty_weight(problem: Problem) -> float:
    """Penalty per normalized violation unit: 10x the largest possible
    single-stage investment outlay."""
    outlay_per_unit = problem.capacities_mw * problem.invest_m_per_mw
    largest = float((problem.u_max @ outlay_per_unit).max())
    return max(10.0 * largest, 1.0)


class _Evaluator:
    """Penalized-fitness memo over whole plans, backed by a stage cache."""

    def __init__(self, problem: Problem, weight: float,
                 cache: StageCache | None = None) -> None:
        self.problem = problem
        self.weight = weight
        self.cache = cache if cache is not None else StageCache(problem)
        self._plans: dict[bytes, tuple[float, PlanEvaluation]] = {}

    def get(self, plan: ExpansionPlan) -> tuple[float, PlanEvaluation]:
        key = plan.key
        hit = self._plans.get(key)
        if hit is not None:
            return hit
        ev = evaluate_plan(self.problem, plan, self.cache)
        fit = ev.breakdown.total + self.weight * ev.total_normalized
        result = (fit, ev)
        self._plans[key] = result
        return result


def fitness(problem: Problem, plan: ExpansionPlan, weight: float | None = None,
            cache: StageCache | None = None) -> float:
    """Total discounted cost plus weighted normalized constraint violations."""
    if weight is None:
        weight = (problem.ga.penalty_weight
                  if problem.ga.penalty_weight is not None
                  else default_penalty_weight(problem))
    ev = evaluate_plan(problem, plan, cache)
    return ev.breakdown.total + weight * ev.total_normalized


# --- repair ------------------------------------------------------------------

class _RepairContext:
    """Precomputed views used by the deterministic stage repair."""

    def __init__(self, problem: Problem) -> None:
        self.problem = problem
        cand = problem.candidate_columns
        ci = problem.invest_m_per_mw
        # candidates by ascending investment cost per MW, index-stable on ties
        self.cheap_first = [int(j) for j in cand[np.argsort(ci[cand],
                                                            kind="stable")]]
        self.costly_first = self.cheap_first[::-1]
        self.caps = problem.capacities_mw
        mix = problem.constraints.fuel_mix
        self.mix_rows = list(mix.items())
        row_of = {cls: r for r, (cls, _) in enumerate(self.mix_rows)}
        self.type_row = [row_of.get(u.fuel_class, -1) for u in problem.units]
        self.class_members = [[j for j in self.cheap_first
                               if self.type_row[j] == r]
                              for r in range(len(self.mix_rows))]


def _stage_base(problem: Problem, builds: np.ndarray, t: int) -> np.ndarray:
    """Fleet in service at stage t excluding stage t's own planned builds."""
    return problem.existing_counts + problem.fixed_builds[: t + 1].sum(axis=0) \
        + builds[:t].sum(axis=0)


def _repair_stage(ctx: _RepairContext, builds: np.ndarray, t: int,
                  base: np.ndarray) -> None:
    """Deterministic greedy push of one stage toward the reserve band and
    fuel-mix bounds, always within per-stage build caps.

    ``base`` is the fleet carried into stage t (existing plus all fixed and
    planned builds through stage t, except stage t's own planned row).  Bulk
    closed-form steps are equivalent to adding or removing one unit at a
    time in cheapest-first (additions) or costliest-first (removals) order.
    """
    problem = ctx.problem
    caps = ctx.caps
    u_max = problem.u_max[t]
    np.clip(builds[t], 0, u_max, out=builds[t])
    counts = base + builds[t]
    total = float(counts @ caps)
    n_rows = len(ctx.mix_rows)
    cls_cap = [float(sum(counts[j] * caps[j] for j in range(len(counts))
                         if ctx.type_row[j] == r)) for r in range(n_rows)]
    peak = problem.horizon.peak_loads_mw[t]
    lo = (1.0 + problem.constraints.reserve_min) * peak
    hi = (1.0 + problem.constraints.reserve_max) * peak

    def apply(j: int, k: int) -> None:
        nonlocal total
        builds[t, j] += k
        r = ctx.type_row[j]
        if r >= 0:
            cls_cap[r] += k * caps[j]
        total += k * caps[j]

    def max_addable(j: int) -> int:
        # headroom within the build cap and the reserve ceiling
        k = int(u_max[j] - builds[t, j])
        k = min(k, math.floor((hi - total) / caps[j]))
        r = ctx.type_row[j]
        if r >= 0:
            mx = ctx.mix_rows[r][1][1]
            if mx < 1.0:
                room = (mx * total - cls_cap[r]) / (caps[j] * (1.0 - mx))
                k = min(k, math.floor(room))
        return max(k, 0)

    def min_keep_removable(j: int) -> int:
        # removable units before the type's class-share minimum binds
        k = int(builds[t, j])
        r = ctx.type_row[j]
        if r >= 0:
            mn = ctx.mix_rows[r][1][0]
            if mn > 0.0:
                room = (cls_cap[r] - mn * total) / (caps[j] * (1.0 - mn))
                k = min(k, math.floor(room))
        return max(k, 0)

    # raise under-represented classes first; this also grows reserve
    for r, (_cls, (mn, _mx)) in enumerate(ctx.mix_rows):
        if mn <= 0.0:
            continue
        for j in ctx.class_members[r]:
            if cls_cap[r] >= mn * total:
                break
            need = (mn * total - cls_cap[r]) / (caps[j] * (1.0 - mn))
            k = min(math.ceil(need), int(u_max[j] - builds[t, j]),
                    math.floor((hi - total) / caps[j]))
            if k > 0:
                apply(j, k)

    # fill to the reserve floor with the cheapest capacity available
    progress = True
    while total < lo and progress:
        progress = False
        for constrained in (True, False):
            for j in ctx.cheap_first:
                k = max_addable(j) if constrained \
                    else min(int(u_max[j] - builds[t, j]),
                             math.floor((hi - total) / caps[j]))
                k = min(k, math.ceil((lo - total) / caps[j]))
                if k > 0:
                    apply(j, k)
                    progress = True
                if total >= lo:
                    break
            if total >= lo:
                break

    # trim over-represented classes, then the reserve ceiling
    for r, (_cls, (_mn, mx)) in enumerate(ctx.mix_rows):
        for j in reversed(ctx.class_members[r]):
            if cls_cap[r] <= mx * total:
                break
            need = (cls_cap[r] - mx * total) / (caps[j] * (1.0 - mx)) \
                if mx < 1.0 else 0.0
            k = min(math.ceil(need), int(builds[t, j]),
                    math.floor((total - lo) / caps[j]))
            if k > 0:
                apply(j, -k)

    progress = True
    while total > hi and progress:
        progress = False
        for constrained in (True, False):
            for j in ctx.costly_first:
                k = min_keep_removable(j) if constrained else int(builds[t, j])
                k = min(k, math.ceil((total - hi) / caps[j]))
                if k > 0:
                    apply(j, -k)
                    progress = True
                if total <= hi:
                    break
            if total <= hi:
                break


def _stage_ok(ctx: _RepairContext, builds: np.ndarray, t: int,
              base: np.ndarray) -> bool:
    problem = ctx.problem
    counts = base + builds[t]
    total = float(counts @ ctx.caps)
    peak = problem.horizon.peak_loads_mw[t]
    if not ((1.0 + problem.constraints.reserve_min) * peak <= total
            <= (1.0 + problem.constraints.reserve_max) * peak):
        return False
    for r, (_cls, (mn, mx)) in enumerate(ctx.mix_rows):
        share = float(sum(counts[j] * ctx.caps[j] for j in range(len(counts))
                          if ctx.type_row[j] == r)) / total
        if not (mn <= share <= mx):
            return False
    return True


def repair_plan(problem: Problem, builds: np.ndarray, first_stage: int = 0,
                ctx: _RepairContext | None = None) -> None:
    """Stage-wise in-place repair of a plan matrix from ``first_stage`` on."""
    ctx = ctx or _RepairContext(problem)
    base = _stage_base(problem, builds, first_stage)
    for t in range(first_stage, problem.stage_count):
        _repair_stage(ctx, builds, t, base)
        if t + 1 < problem.stage_count:
            base = base + builds[t] + problem.fixed_builds[t + 1]


def _sample_plan(problem: Problem, rng: np.random.Generator, ctx: _RepairContext,
                 stage_attempts: int = 10) -> ExpansionPlan:
    builds = np.zeros((problem.stage_count, problem.n_types), dtype=np.int64)
    mask = problem.candidate_mask
    base = problem.existing_counts + problem.fixed_builds[0]
    for t in range(problem.stage_count):
        for _ in range(stage_attempts):
            builds[t] = rng.integers(0, problem.u_max[t] + 1) * mask
            _repair_stage(ctx, builds, t, base)
            if _stage_ok(ctx, builds, t, base):
                break
        if t + 1 < problem.stage_count:
            base = base + builds[t] + problem.fixed_builds[t + 1]
    return ExpansionPlan(builds)


def random_feasible_chromosome(problem: Problem, rng: np.random.Generator,
                               cache: StageCache | None = None,
                               stage_attempts: int = 10
                               ) -> tuple[ExpansionPlan, FeasibilityReport]:
    """Draw a plan stage by stage, repairing and retrying toward feasibility.

    Returns the sampled plan (possibly still infeasible after the attempt
    budget) together with its full constraint report.
    """
    plan = _sample_plan(problem, rng, _RepairContext(problem), stage_attempts)
    return plan, evaluate_plan(problem, plan, cache).report


# --- operators ---------------------------------------------------------------

def select_parent(plans: list[ExpansionPlan], fitnesses: np.ndarray,
                  rng: np.random.Generator) -> ExpansionPlan:
    """Rank-based roulette: the k-th best of n carries weight n - k + 1."""
    order = np.argsort(fitnesses, kind="stable")
    cum = np.cumsum(np.arange(len(plans), 0, -1))
    pick = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return plans[order[pick]]


def crossover(problem: Problem, a: ExpansionPlan, b: ExpansionPlan,
              rng: np.random.Generator, config: GAConfig | None = None,
              ctx: _RepairContext | None = None
              ) -> tuple[ExpansionPlan, ExpansionPlan]:
    """Recombine two plans; operator chosen by roulette over configured odds.

    One-point and two-point cuts act on the flattened candidate genes;
    substring crossover swaps one whole stage block.  Children are repaired
    stage-wise from the first stage the cut can have changed.
    """
    config = config or problem.ga
    ctx = ctx or _RepairContext(problem)
    ga, gb = plan_to_genes(problem, a).copy(), plan_to_genes(problem, b).copy()
    n = len(ga)
    width = max(n // problem.stage_count, 1)
    p_one, p_two, _ = config.crossover_type_probs
    draw = rng.random()
    if draw < p_one or n < 3:
        first = 0
        if n >= 2:
            cut = int(rng.integers(1, n))
            ga[cut:], gb[cut:] = gb[cut:].copy(), ga[cut:].copy()
            first = cut // width
    elif draw < p_one + p_two:
        c1, c2 = np.sort(rng.choice(n - 1, size=2, replace=False) + 1)
        ga[c1:c2], gb[c1:c2] = gb[c1:c2].copy(), ga[c1:c2].copy()
        first = int(c1) // width
    else:
        t = int(rng.integers(problem.stage_count))
        sl = slice(t * width, (t + 1) * width)
        ga[sl], gb[sl] = gb[sl].copy(), ga[sl].copy()
        first = t
    children = []
    for genes in (ga, gb):
        builds = _genes_to_builds(problem, genes)
        repair_plan(problem, builds, first, ctx)
        children.append(ExpansionPlan(builds))
    return children[0], children[1]


def mutate(problem: Problem, plan: ExpansionPlan, rng: np.random.Generator,
           ctx: _RepairContext | None = None) -> ExpansionPlan:
    """Redraw one uniformly chosen gene within its cap, then repair its stage."""
    ctx = ctx or _RepairContext(problem)
    genes = plan_to_genes(problem, plan).copy()
    if len(genes) == 0:
        return plan
    width = len(genes) // problem.stage_count
    pos = int(rng.integers(len(genes)))
    t, col = divmod(pos, width)
    j = int(problem.candidate_columns[col])
    genes[pos] = int(rng.integers(0, problem.u_max[t, j] + 1))
    builds = _genes_to_builds(problem, genes)
    _repair_stage(ctx, builds, t, _stage_base(problem, builds, t))
    return ExpansionPlan(builds)


# --- evolution ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GARunResult:
    """Outcome of one evolution run."""

    plan: ExpansionPlan
    fitness: float
    evaluation: PlanEvaluation
    feasible: bool
    feasible_found: bool            # any feasible plan seen during the run
    history: tuple[tuple[float, float], ...]   # (best, mean) fitness per generation
    seed: int


def evolve(problem: Problem, config: GAConfig | None = None,
           seed: int | None = None, cache: StageCache | None = None,
           evaluator: "_Evaluator | None" = None) -> GARunResult:
    """Run one genetic search; deterministic for a given seed.

    Returns the best feasible plan encountered if any plan was feasible,
    otherwise the best penalized plan.  A shared evaluator only memoizes
    values that are pure functions of the plan, so passing one across runs
    does not change any result.
    """
    config = config or problem.ga
    if seed is None:
        seed = config.seed
    rng = np.random.Generator(np.random.PCG64(seed))
    weight = (config.penalty_weight if config.penalty_weight is not None
              else default_penalty_weight(problem))
    ev = evaluator if evaluator is not None else _Evaluator(problem, weight, cache)
    ctx = _RepairContext(problem)

    pop_size = config.population_size
    pop = [_sample_plan(problem, rng, ctx) for _ in range(pop_size)]
    fits = np.array([ev.get(p)[0] for p in pop])

    best_fit, best_plan = math.inf, None
    feas_fit, feas_plan = math.inf, None

    def track(plans, fit_values) -> None:
        nonlocal best_fit, best_plan, feas_fit, feas_plan
        for plan, fit in zip(plans, fit_values):
            fit = float(fit)
            if fit < best_fit:
                best_fit, best_plan = fit, plan
            if fit < feas_fit and ev.get(plan)[1].feasible:
                feas_fit, feas_plan = fit, plan

    track(pop, fits)
    history = [(float(fits.min()), float(fits.mean()))]

    n_children = int(round(config.crossover_fraction * pop_size))
    n_children = min(n_children, pop_size - config.elite_count)
    for _ in range(config.generations):
        order = np.argsort(fits, kind="stable")
        sorted_plans = [pop[i] for i in order]
        new_pop = sorted_plans[: config.elite_count]
        cum = np.cumsum(np.arange(pop_size, 0, -1))

        def pick() -> ExpansionPlan:
            r = rng.random() * cum[-1]
            return sorted_plans[int(np.searchsorted(cum, r, side="right"))]

        children: list[ExpansionPlan] = []
        while len(children) < n_children:
            ca, cb = crossover(problem, pick(), pick(), rng, config, ctx)
            children.append(ca)
            if len(children) < n_children:
                children.append(cb)
        new_pop = new_pop + children
        while len(new_pop) < pop_size:
            new_pop.append(pick())

        n_mut = min(config.mutants_per_generation, pop_size - config.elite_count)
        if n_mut:
            slots = rng.choice(np.arange(config.elite_count, pop_size),
                               size=n_mut, replace=False)
            for i in slots:
                new_pop[int(i)] = mutate(problem, new_pop[int(i)], rng, ctx)

        pop = new_pop
        fits = np.array([ev.get(p)[0] for p in pop])
        track(pop, fits)
        history.append((float(fits.min()), float(fits.mean())))

    feasible_found = feas_plan is not None
    final_plan = feas_plan if feasible_found else best_plan
    final_fit, final_eval = ev.get(final_plan)
    return GARunResult(plan=final_plan, fitness=float(final_fit),
                       evaluation=final_eval, feasible=final_eval.feasible,
                       feasible_found=feasible_found,
                       history=tuple(history), seed=seed)


@dataclass(frozen=True, eq=False)
class MultiRunResult:
    """Best-of-runs outcome plus every per-run result, in run order."""

    best: GARunResult
    runs: tuple[GARunResult, ...]
    seeds: tuple[int, ...]


def derive_seeds(master_seed: int, runs: int) -> tuple[int, ...]:
    """Independent, deterministic per-run seeds from one master seed."""
    state = np.random.SeedSequence(master_seed).generate_state(runs, np.uint64)
    return tuple(int(s) for s in state)


def _run_one(args) -> GARunResult:
    problem, config, seed = args
    return evolve(problem, config, seed=seed)


def multi_run(problem: Problem, config: GAConfig | None = None,
              threads: int = 1, cache: StageCache | None = None) -> MultiRunResult:
    """Execute the configured number of independent runs; best fitness wins.

    Results do not depend on ``threads``: runs are seeded independently and
    all cached quantities are canonical functions of fleet composition.
    """
    config = config or problem.ga
    seeds = derive_seeds(config.seed, config.runs)
    if threads > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=min(threads, config.runs)) as pool:
            results = list(pool.map(_run_one,
                                    [(problem, config, s) for s in seeds]))
    else:
        weight = (config.penalty_weight if config.penalty_weight is not None
                  else default_penalty_weight(problem))
        shared = _Evaluator(problem, weight, cache)
        results = [evolve(problem, config, seed=s, evaluator=shared)
                   for s in seeds]
    # feasible results outrank infeasible ones regardless of penalized fitness;
    # min() is stable, so run order breaks exact ties deterministically
    best = min(results, key=lambda r: (not r.feasible, r.fitness))
    return MultiRunResult(best=best, runs=tuple(results), seeds=seeds)
