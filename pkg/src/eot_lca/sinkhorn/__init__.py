"""Log-domain Sinkhorn solver, Sinkhorn divergence and projective fast paths."""

from .divergence import sinkhorn_divergence, sinkhorn_divergence_terms
from .kernel import LengthMismatch, LogKernel, NonpositiveEps, check_eps, entropic_transform
from .projective import (
    NotOrthogonal,
    WrongCostVariant,
    check_orthogonal,
    eot_orthogonal,
    eot_projective,
    split_measure,
)
from .solver import (
    EotSolution,
    Potentials,
    SinkhornConfig,
    SolverConfigError,
    iter_plan_rows,
    iteration_budget,
    marginal_tv_error,
    plan,
    sinkhorn_solve,
    stability_error_bound,
)

__all__ = [
    "EotSolution",
    "LengthMismatch",
    "LogKernel",
    "NonpositiveEps",
    "NotOrthogonal",
    "Potentials",
    "SinkhornConfig",
    "SolverConfigError",
    "WrongCostVariant",
    "check_eps",
    "check_orthogonal",
    "entropic_transform",
    "eot_orthogonal",
    "eot_projective",
    "iter_plan_rows",
    "iteration_budget",
    "marginal_tv_error",
    "plan",
    "sinkhorn_divergence",
    "sinkhorn_divergence_terms",
    "sinkhorn_solve",
    "split_measure",
]
