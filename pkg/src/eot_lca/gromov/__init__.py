"""Entropic Gromov-Wasserstein distance."""

from .solver import (
    ABoundViolated,
    GwConfig,
    GwSolution,
    entropic_gw,
    entropic_gw_solution,
    gw11,
    gw2_solve,
)

__all__ = [
    "ABoundViolated",
    "GwConfig",
    "GwSolution",
    "entropic_gw",
    "entropic_gw_solution",
    "gw11",
    "gw2_solve",
]
