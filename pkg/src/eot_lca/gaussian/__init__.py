"""Closed-form Gaussian EOT oracle and the matrix functions behind it."""

from .closed_form import (
    GaussianParam,
    bures_eps,
    gaussian_eot,
    gaussian_lca_check,
    random_psd,
    sample_gaussian,
)
from .linalg import NotPSD, NotSymmetric, low_rank_factor, psd_eig, sym_eig, sym_sqrt

__all__ = [
    "GaussianParam",
    "NotPSD",
    "NotSymmetric",
    "bures_eps",
    "gaussian_eot",
    "gaussian_lca_check",
    "low_rank_factor",
    "psd_eig",
    "random_psd",
    "sample_gaussian",
    "sym_eig",
    "sym_sqrt",
]
