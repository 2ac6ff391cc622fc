"""Monte Carlo sweeps over (eps, n, repetition) with seed-derived streams.

Every random draw comes from ``Seed(cfg.seed).stream(kind, setting, ...)``,
so records are a pure function of the config. Population draws, sweep draws
and the fixed semidiscrete support use disjoint stream families.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from eot_lca.common.errors import EotError
from eot_lca.common.logging import log, setup_logger
from eot_lca.common.parallel import parallel_map
from eot_lca.cost import CostSpec, L1, LInf, SqEuclidean
from eot_lca.measure import (
    DiscreteMeasure,
    Seed,
    fixed_discrete_support,
    resample,
    sample_cube,
    sample_surface,
)
from eot_lca.sinkhorn import EotSolution, SinkhornConfig, sinkhorn_divergence_terms, sinkhorn_solve

from .config import SETTINGS, ExperimentConfig

LOGGER = setup_logger("runner")

STREAM_POPULATION = 1
STREAM_SWEEP = 2
STREAM_SUPPORT = 3
MU_SIDE = 0
NU_SIDE = 1
SETTING_KEYS = {name: index for index, name in enumerate(SETTINGS, start=1)}
CSV_COLUMNS = [
    "setting",
    "d1",
    "d2",
    "eps",
    "n",
    "rep",
    "estimate",
    "abs_dev",
    "iterations",
    "wall_ms",
    "converged",
    "potential_var",
]

_COSTS: Dict[str, Callable[..., CostSpec]] = {"sqeuclidean": SqEuclidean, "l1": L1, "linf": LInf}


class EmptyCell(EotError):
    """No usable observations for an aggregate."""


@dataclass(frozen=True)
class ExperimentRecord:
    setting: str
    d1: int
    d2: int
    eps: float
    n: int
    rep: int
    estimate: float
    abs_dev: float
    iterations: int
    wall_ms: float
    converged: bool
    potential_var: float = 0.0

    def to_row(self) -> Dict[str, Any]:
        return {column: getattr(self, column) for column in CSV_COLUMNS}


@dataclass(frozen=True)
class Estimate:
    value: float
    iterations: int
    converged: bool
    potential_var: float


@dataclass(frozen=True)
class PopulationEstimate:
    eps: float
    value: float
    sd: float
    runs: int
    failures: int

    def to_dict(self) -> Dict[str, Any]:
        return {"eps": self.eps, "value": self.value, "sd": self.sd, "runs": self.runs, "failures": self.failures}


@dataclass(frozen=True)
class SweepTask:
    cfg: ExperimentConfig
    eps_index: int
    n: int
    rep: int
    population: float

    @property
    def sort_key(self) -> Tuple[int, int, int]:
        return (self.eps_index, self.n, self.rep)


def build_cost(cfg: ExperimentConfig) -> CostSpec:
    return _COSTS[cfg.cost_variant](scale=cfg.cost_scale)


def solver_config(cfg: ExperimentConfig, eps: float) -> SinkhornConfig:
    return SinkhornConfig(eps=eps, marginal_tol=cfg.marginal_tol, max_iters=cfg.max_iters)


def fixed_support(cfg: ExperimentConfig) -> DiscreteMeasure:
    """The I-atom measure of the semidiscrete setting, shared by all runs."""

    stream = Seed(cfg.seed).stream(STREAM_SUPPORT, SETTING_KEYS[cfg.setting], cfg.d1, cfg.d2)
    return fixed_discrete_support(cfg.d1, cfg.d2, stream)


def draw_samples(
    cfg: ExperimentConfig,
    n: int,
    rng_mu: np.random.Generator,
    rng_nu: np.random.Generator,
    *,
    exact_mu: bool = False,
) -> Tuple[DiscreteMeasure, DiscreteMeasure]:
    """Empirical measures of size n for the configured setting.

    With ``exact_mu`` (semidiscrete only) the discrete measure is used as is.
    """

    dim = cfg.ambient_dim
    if cfg.setting in ("cube", "sinkhorn_divergence"):
        return sample_cube(cfg.d1, dim, n, rng_mu), sample_cube(cfg.d2, dim, n, rng_nu)
    if cfg.setting == "surface":
        mu = sample_surface("T", cfg.d1, dim - cfg.d1, n, rng_mu)
        nu = sample_surface("S", cfg.d2, dim - cfg.d2, n, rng_nu)
        return mu, nu
    support = fixed_support(cfg)
    mu = support if exact_mu or cfg.estimator == "one-sample" else resample(support, n, rng_mu)
    return mu, sample_cube(cfg.d2, cfg.d2, n, rng_nu)


def potential_variance(
    sol: EotSolution, mu: DiscreteMeasure, nu: DiscreteMeasure, *, sampled_mu: bool = True
) -> float:
    """Var of phi under mu plus Var of psi under nu; a fixed mu contributes nothing."""

    def weighted_var(values: np.ndarray, weights: np.ndarray) -> float:
        mean = float(weights @ values)
        return float(weights @ (values - mean) ** 2)

    total = weighted_var(sol.potentials.psi, nu.weights)
    if sampled_mu:
        total += weighted_var(sol.potentials.phi, mu.weights)
    return total


def estimate(
    cfg: ExperimentConfig, mu: DiscreteMeasure, nu: DiscreteMeasure, eps: float, *, sampled_mu: bool = True
) -> Estimate:
    spec = build_cost(cfg)
    solver = solver_config(cfg, eps)
    if cfg.setting == "sinkhorn_divergence":
        value, solutions = sinkhorn_divergence_terms(mu, nu, spec, solver)
        cross = solutions[0]
        return Estimate(
            value=value,
            iterations=sum(sol.iterations for sol in solutions),
            converged=all(sol.converged for sol in solutions),
            potential_var=potential_variance(cross, mu, nu),
        )
    sol = sinkhorn_solve(mu, nu, spec, solver)
    return Estimate(
        value=sol.dual_value,
        iterations=sol.iterations,
        converged=sol.converged,
        potential_var=potential_variance(sol, mu, nu, sampled_mu=sampled_mu),
    )


def _population_run(task: Tuple[ExperimentConfig, float, int]) -> Estimate:
    cfg, eps, pop_rep = task
    seed = Seed(cfg.seed)
    key = SETTING_KEYS[cfg.setting]
    rng_mu = seed.stream(STREAM_POPULATION, key, pop_rep, MU_SIDE)
    rng_nu = seed.stream(STREAM_POPULATION, key, pop_rep, NU_SIDE)
    exact = cfg.setting == "semidiscrete"
    mu, nu = draw_samples(cfg, cfg.pop_n, rng_mu, rng_nu, exact_mu=exact)
    return estimate(cfg, mu, nu, eps, sampled_mu=not exact)


def population_estimate(cfg: ExperimentConfig, eps: float) -> PopulationEstimate:
    """Mean over ``pop_reps`` plug-in estimates at ``pop_n`` samples.

    The semidiscrete population keeps the discrete measure exact. Runs that
    did not converge are dropped and counted.
    """

    runs = parallel_map(_population_run, [(cfg, eps, rep) for rep in range(cfg.pop_reps)], cfg.workers)
    kept = np.array([run.value for run in runs if run.converged])
    failures = len(runs) - kept.size
    if failures:
        log(LOGGER, logging.WARNING, "population_runs_not_converged", eps=eps, failures=failures, runs=len(runs))
    if kept.size == 0:
        raise EmptyCell(f"no population run converged at eps={eps}")
    sd = float(np.std(kept, ddof=1)) if kept.size > 1 else 0.0
    return PopulationEstimate(eps=eps, value=float(np.mean(kept)), sd=sd, runs=len(runs), failures=failures)


def approximate_population(cfg: ExperimentConfig, eps: float | None = None) -> float:
    """Population value OT_eps(mu, nu) approximated by Monte Carlo (first eps by default)."""

    return population_estimate(cfg, cfg.eps_list[0] if eps is None else eps).value


def population_table(cfg: ExperimentConfig) -> List[PopulationEstimate]:
    table = [population_estimate(cfg, eps) for eps in cfg.eps_list]
    for entry in table:
        log(LOGGER, logging.INFO, "population_complete", setting=cfg.setting, eps=entry.eps, value=entry.value)
    return table


def run_task(task: SweepTask) -> ExperimentRecord:
    cfg = task.cfg
    eps = cfg.eps_list[task.eps_index]
    seed = Seed(cfg.seed)
    key = SETTING_KEYS[cfg.setting]
    rng_mu = seed.stream(STREAM_SWEEP, key, task.eps_index, task.n, task.rep, MU_SIDE)
    rng_nu = seed.stream(STREAM_SWEEP, key, task.eps_index, task.n, task.rep, NU_SIDE)
    mu, nu = draw_samples(cfg, task.n, rng_mu, rng_nu)
    sampled_mu = not (cfg.setting == "semidiscrete" and cfg.estimator == "one-sample")
    started = time.perf_counter()
    result = estimate(cfg, mu, nu, eps, sampled_mu=sampled_mu)
    wall_ms = (time.perf_counter() - started) * 1000.0 if cfg.timing else 0.0
    return ExperimentRecord(
        setting=cfg.setting,
        d1=cfg.d1,
        d2=cfg.d2,
        eps=eps,
        n=task.n,
        rep=task.rep,
        estimate=result.value,
        abs_dev=abs(result.value - task.population),
        iterations=result.iterations,
        wall_ms=wall_ms,
        converged=result.converged,
        potential_var=result.potential_var,
    )


def sweep_tasks(cfg: ExperimentConfig, populations: Sequence[float]) -> List[SweepTask]:
    return [
        SweepTask(cfg=cfg, eps_index=eps_index, n=n, rep=rep, population=populations[eps_index])
        for eps_index in range(len(cfg.eps_list))
        for n in cfg.n_grid
        for rep in range(cfg.reps)
    ]


def run_experiment(
    cfg: ExperimentConfig, populations: Iterable[float] | None = None
) -> List[ExperimentRecord]:
    """All records of the sweep, ordered by (eps index, n, rep)."""

    if populations is None:
        values = [entry.value for entry in population_table(cfg)]
    else:
        values = [float(value) for value in populations]
    if len(values) != len(cfg.eps_list):
        raise EmptyCell(f"{len(values)} population values for {len(cfg.eps_list)} eps values")
    tasks = sweep_tasks(cfg, values)
    results = parallel_map(run_task, tasks, cfg.workers)
    order = sorted(range(len(tasks)), key=lambda index: tasks[index].sort_key)
    records = [results[index] for index in order]
    failures = sum(1 for record in records if not record.converged)
    log(
        LOGGER,
        logging.INFO,
        "sweep_complete",
        setting=cfg.setting,
        records=len(records),
        failures=failures,
    )
    return records
