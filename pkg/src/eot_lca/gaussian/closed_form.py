"""Closed-form entropic OT between Gaussians (cost |x - y|^2).

B(S1, S2) = tr(S1 + S2 - D) + (eps/2) log det(D + (eps/2) I) + d (eps/2)(1 - log eps)
with D = (4 S1^(1/2) S2 S1^(1/2) + (eps^2/4) I)^(1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Tuple

import numpy as np
from numpy.typing import ArrayLike

from eot_lca.cost import DimensionMismatch
from eot_lca.measure import DiscreteMeasure, make_measure
from eot_lca.measure.sampling import SeedLike, as_generator
from eot_lca.sinkhorn import check_eps, check_orthogonal

from .linalg import NotPSD, _as_symmetric, psd_eig, sym_sqrt


@dataclass(frozen=True, eq=False)
class GaussianParam:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=np.float64, copy=True).reshape(-1)
        cov = _as_symmetric(np.atleast_2d(np.asarray(self.cov, dtype=np.float64)))
        if cov.shape[0] != mean.shape[0]:
            raise DimensionMismatch(f"mean has {mean.shape[0]} entries but cov is {cov.shape[0]}x{cov.shape[1]}")
        if not np.all(np.isfinite(mean)):
            raise DimensionMismatch("mean must be finite")
        psd_eig(cov)
        for array in (mean, cov):
            array.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "GaussianParam":
        if not isinstance(data, Mapping) or "cov" not in data:
            raise DimensionMismatch("a Gaussian needs at least a 'cov' entry")
        cov = np.atleast_2d(np.asarray(data["cov"], dtype=np.float64))
        mean = data.get("mean")
        return cls(mean=np.zeros(cov.shape[0]) if mean is None else mean, cov=cov)

    def to_dict(self) -> dict[str, Any]:
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}


def bures_eps(S1: ArrayLike, S2: ArrayLike, eps: float) -> float:
    """Entropic Bures term; PSD (singular) inputs are allowed."""

    eps = check_eps(eps)
    root = sym_sqrt(S1)
    second = _as_symmetric(S2)
    if root.shape != second.shape:
        raise DimensionMismatch(f"covariances of shapes {root.shape} and {second.shape}")
    d = root.shape[0]
    if d == 0:
        return 0.0
    psd_eig(second)
    inner = 4.0 * root @ second @ root + (eps**2 / 4.0) * np.eye(d)
    _, lam = psd_eig(0.5 * (inner + inner.T))
    d_spectrum = np.sqrt(lam)
    half = eps / 2.0
    trace_term = float(np.trace(root @ root) + np.trace(second) - np.sum(d_spectrum))
    logdet = float(np.sum(np.log(d_spectrum + half)))
    return trace_term + half * logdet + d * half * (1.0 - math.log(eps))


def gaussian_eot(p: GaussianParam, q: GaussianParam, eps: float) -> float:
    if p.dim != q.dim:
        raise DimensionMismatch(f"Gaussians in R^{p.dim} and R^{q.dim}")
    shift = float(np.sum((p.mean - q.mean) ** 2))
    return shift + bures_eps(p.cov, q.cov, eps)


def gaussian_lca_check(
    U1: ArrayLike, lam1: ArrayLike, S2: ArrayLike, eps: float
) -> Tuple[float, float]:
    """Both sides of the low-rank identity for S1 = U1 diag(lam1) U1^T.

    lhs = B(S1, S2); rhs = B(diag(lam1), U1^T S2 U1) + tr((I - U1 U1^T) S2).
    """

    factor = check_orthogonal(U1)
    spectrum = np.asarray(lam1, dtype=np.float64).reshape(-1)
    if spectrum.shape[0] != factor.shape[1]:
        raise DimensionMismatch(f"U1 has {factor.shape[1]} columns but {spectrum.shape[0]} eigenvalues")
    if np.any(spectrum < 0):
        raise NotPSD("low-rank eigenvalues must be nonnegative")
    second = _as_symmetric(S2)
    if second.shape[0] != factor.shape[0]:
        raise DimensionMismatch(f"U1 is {factor.shape[0]}x{factor.shape[1]} but S2 is {second.shape[0]}-dimensional")
    S1 = (factor * spectrum) @ factor.T
    lhs = bures_eps(0.5 * (S1 + S1.T), second, eps)
    reduced = factor.T @ second @ factor
    projector = np.eye(factor.shape[0]) - factor @ factor.T
    rhs = bures_eps(np.diag(spectrum), 0.5 * (reduced + reduced.T), eps) + float(np.trace(projector @ second))
    return lhs, rhs


def sample_gaussian(param: GaussianParam, n: int, seed: SeedLike) -> DiscreteMeasure:
    """Empirical measure of n i.i.d. draws from N(mean, cov)."""

    rng = as_generator(seed)
    draws = rng.standard_normal((n, param.dim)) @ sym_sqrt(param.cov) + param.mean[None, :]
    return make_measure(draws)


def random_psd(d: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    """Random PSD matrix of the given rank (Wishart-like G G^T / rank)."""

    if rank == 0:
        return np.zeros((d, d))
    G = rng.standard_normal((d, rank))
    S = G @ G.T / rank
    return 0.5 * (S + S.T)
