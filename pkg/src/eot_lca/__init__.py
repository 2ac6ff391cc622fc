"""Entropic optimal transport solvers, oracles and LCA simulation tooling."""

__version__ = "0.1.0"

__all__ = [
    "cli",
    "common",
    "cost",
    "experiments",
    "gaussian",
    "gromov",
    "measure",
    "sinkhorn",
]
