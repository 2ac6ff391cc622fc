"""Entropic (2,2)-Gromov-Wasserstein via the bilinear-cost reduction.

For centered measures GW_eps = GW_11 + GW_2eps, and
GW_2eps = min over A of 32 |A|_F^2 + OT_eps with cost
c_A(x, y) = -4 |x|^2 |y|^2 - 32 x^T A y. The minimum is found by
alternating a Sinkhorn solve in the plan with the closed-form A = M(pi) / 2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Tuple

import numpy as np

from eot_lca.common.errors import EotError, NotConverged
from eot_lca.common.logging import log, setup_logger
from eot_lca.common.parallel import parallel_map
from eot_lca.cost import GwBilinear
from eot_lca.measure import DiscreteMeasure, Seed, center, diameter
from eot_lca.sinkhorn import EotSolution, SinkhornConfig, SolverConfigError, check_eps, iter_plan_rows, sinkhorn_solve

LOGGER = setup_logger("gromov")

BOUND_SLACK = 1e-9
INCREASE_TOL = 1e-10


class ABoundViolated(EotError):
    """The coupling matrix left [-r^2/2, r^2/2]; usually an uncentered input."""


@dataclass(frozen=True)
class GwConfig:
    eps: float
    outer_tol: float = 1e-7
    max_outer: int = 200
    inner: SinkhornConfig | None = None
    restarts: int = 1
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        eps = check_eps(self.eps)
        object.__setattr__(self, "eps", eps)
        if not (math.isfinite(self.outer_tol) and self.outer_tol > 0):
            raise SolverConfigError(f"outer_tol must be positive, got {self.outer_tol}")
        if int(self.max_outer) < 1:
            raise SolverConfigError(f"max_outer must be at least 1, got {self.max_outer}")
        if int(self.restarts) < 1:
            raise SolverConfigError(f"restarts must be at least 1, got {self.restarts}")
        if int(self.workers) < 1:
            raise SolverConfigError(f"workers must be at least 1, got {self.workers}")
        inner = self.inner if self.inner is not None else SinkhornConfig(eps=eps)
        object.__setattr__(self, "inner", inner.with_eps(eps))

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "GwConfig":
        payload = dict(data)
        inner = payload.pop("inner", None)
        if isinstance(inner, Mapping):
            inner = SinkhornConfig.from_mapping({"eps": payload.get("eps"), **inner})
        return cls(inner=inner, **payload)

    @property
    def sinkhorn(self) -> SinkhornConfig:
        assert self.inner is not None
        return self.inner


@dataclass(frozen=True, eq=False)
class GwSolution:
    value: float
    A: np.ndarray
    outer_iters: int
    objective_trace: Tuple[float, ...]
    converged: bool = True
    grad_norm: float = 0.0
    restarts: int = 1
    inner: EotSolution | None = field(default=None, repr=False)

    def raise_for_status(self) -> "GwSolution":
        if not self.converged:
            raise NotConverged(f"GW alternation stopped after {self.outer_iters} outer iterations")
        return self


def gw11(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Moment part: E|X - X'|^2 + E|Y - Y'|^2 - 4 E|X|^2 E|Y|^2 for independent copies."""

    def spread(m: DiscreteMeasure) -> float:
        mean = m.mean()
        return 2.0 * (m.second_moment() - float(mean @ mean))

    return spread(mu) + spread(nu) - 4.0 * mu.second_moment() * nu.second_moment()


def _cross_moment(sol: EotSolution, mu: DiscreteMeasure, nu: DiscreteMeasure, spec: GwBilinear) -> np.ndarray:
    """M(pi) = sum_ij pi_ij x_i y_j^T."""

    M = np.zeros((mu.dim, nu.dim))
    for rows, block in iter_plan_rows(sol, mu, nu, spec):
        M += mu.points[rows].T @ (block @ nu.points)
    return M


def _check_bound(A: np.ndarray, radius: float) -> None:
    limit = 0.5 * radius**2
    worst = float(np.max(np.abs(A))) if A.size else 0.0
    if worst > limit * (1.0 + BOUND_SLACK) + BOUND_SLACK:
        raise ABoundViolated(f"|A| reached {worst:.6g}, outside the box of half-width {limit:.6g}")


def _relative_change(previous: float, current: float) -> float:
    denominator = abs(previous) if previous != 0.0 else 1e-15
    return abs(previous - current) / denominator


def _alternate(
    mu: DiscreteMeasure, nu: DiscreteMeasure, cfg: GwConfig, A0: np.ndarray, radius: float
) -> GwSolution:
    inner = cfg.sinkhorn

    def solve(A: np.ndarray) -> Tuple[EotSolution, GwBilinear, float]:
        spec = GwBilinear(A=A)
        sol = sinkhorn_solve(mu, nu, spec, inner)
        return sol, spec, 32.0 * float(np.sum(A**2)) + sol.dual_value

    A = A0
    _check_bound(A, radius)
    sol, spec, objective = solve(A)
    trace = [objective]
    converged = False
    A_next = 0.5 * _cross_moment(sol, mu, nu, spec)
    while True:
        _check_bound(A_next, radius)
        grad = 64.0 * float(np.max(np.abs(A - A_next))) if A.size else 0.0
        if grad <= 64.0 * cfg.outer_tol * (1.0 + float(np.max(np.abs(A)))):
            converged = True
            break
        if len(trace) >= cfg.max_outer:
            break
        sol_next, spec_next, objective_next = solve(A_next)
        if objective_next > objective:
            converged = objective_next - objective <= INCREASE_TOL * max(1.0, abs(objective))
            if not converged:
                log(LOGGER, logging.WARNING, "gw_objective_increase", previous=objective, current=objective_next)
            break
        change = _relative_change(objective, objective_next)
        A, sol, spec, objective = A_next, sol_next, spec_next, objective_next
        trace.append(objective)
        A_next = 0.5 * _cross_moment(sol, mu, nu, spec)
        if change <= cfg.outer_tol:
            converged = True
            break

    return GwSolution(
        value=objective,
        A=A,
        outer_iters=len(trace),
        objective_trace=tuple(trace),
        converged=converged and sol.converged,
        grad_norm=64.0 * float(np.max(np.abs(A - A_next))) if A.size else 0.0,
        inner=sol,
    )


def _restart(task: Tuple[DiscreteMeasure, DiscreteMeasure, GwConfig, int, float]) -> GwSolution:
    mu, nu, cfg, restart, radius = task
    if restart == 0:
        A0 = np.zeros((mu.dim, nu.dim))
    else:
        half_width = 0.5 * radius**2
        A0 = Seed(int(cfg.seed)).stream(restart).uniform(-half_width, half_width, size=(mu.dim, nu.dim))
    return _alternate(mu, nu, cfg, A0, radius)


def gw2_solve(mu: DiscreteMeasure, nu: DiscreteMeasure, cfg: GwConfig) -> GwSolution:
    """Minimize 32 |A|^2 + OT_eps(c_A) over A; inputs must be centered.

    The first start is A = 0; further restarts draw A uniformly in the box
    [-r^2/2, r^2/2]^(s x d) and the lowest objective wins. Restarts are
    independent; with ``workers > 1`` they run in a process pool.
    """

    radius = max(diameter(mu), diameter(nu))
    tasks = [(mu, nu, cfg, restart, radius) for restart in range(int(cfg.restarts))]
    best: GwSolution | None = None
    for restart, candidate in enumerate(parallel_map(_restart, tasks, int(cfg.workers))):
        log(
            LOGGER,
            logging.DEBUG,
            "gw_restart_complete",
            restart=restart,
            value=candidate.value,
            outer_iters=candidate.outer_iters,
        )
        if best is None or candidate.value < best.value:
            best = candidate
    assert best is not None
    if not best.converged:
        log(LOGGER, logging.WARNING, "gw_not_converged", outer_iters=best.outer_iters, value=best.value)
    return replace(best, restarts=int(cfg.restarts))


def entropic_gw_solution(mu: DiscreteMeasure, nu: DiscreteMeasure, cfg: GwConfig) -> Tuple[float, GwSolution]:
    mu_c, nu_c = center(mu), center(nu)
    solution = gw2_solve(mu_c, nu_c, cfg)
    return gw11(mu_c, nu_c) + solution.value, solution


def entropic_gw(mu: DiscreteMeasure, nu: DiscreteMeasure, cfg: GwConfig) -> float:
    """GW_eps after centering both measures."""

    value, _ = entropic_gw_solution(mu, nu, cfg)
    return value
