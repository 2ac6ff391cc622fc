"""Fast paths for costs that only see part of the target space."""

from __future__ import annotations

from typing import Callable

import numpy as np
from numpy.typing import ArrayLike

from eot_lca.common.errors import EotError
from eot_lca.cost import CostSpec, DimensionMismatch, SqEuclidean
from eot_lca.measure import DiscreteMeasure, make_measure

from .solver import SinkhornConfig, sinkhorn_solve

ORTHOGONALITY_TOL = 1e-10


class NotOrthogonal(EotError):
    """Embedding matrix does not have orthonormal columns."""


class WrongCostVariant(EotError):
    """The operation is only defined for another cost variant."""


def split_measure(nu: DiscreteMeasure, split: int) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Marginals of nu on the first ``split`` coordinates and on the rest."""

    if not 0 < split <= nu.dim:
        raise DimensionMismatch(f"split index {split} outside 1..{nu.dim}")
    head = make_measure(nu.points[:, :split], nu.weights)
    tail = make_measure(nu.points[:, split:], nu.weights) if split < nu.dim else head
    return head, tail


def eot_projective(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    c1: CostSpec,
    c2: Callable[[np.ndarray], np.ndarray] | None,
    split: int,
    cfg: SinkhornConfig,
) -> float:
    """OT for c(x, (y1, y2)) = c1(x, y1) + c2(y2).

    Solves only on (mu, nu_1) and adds the exact integral of c2 under nu_2.
    """

    head, _ = split_measure(nu, split)
    value = sinkhorn_solve(mu, head, c1, cfg).dual_value
    if c2 is None or split == nu.dim:
        return value
    residual = np.asarray(c2(nu.points[:, split:]), dtype=np.float64).reshape(-1)
    return value + float(nu.weights @ residual)


def check_orthogonal(U: ArrayLike) -> np.ndarray:
    matrix = np.asarray(U, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] > matrix.shape[0]:
        raise NotOrthogonal(f"expected a d x s matrix with s <= d, got shape {matrix.shape}")
    gap = np.max(np.abs(matrix.T @ matrix - np.eye(matrix.shape[1]))) if matrix.size else 0.0
    if gap > ORTHOGONALITY_TOL:
        raise NotOrthogonal(f"U^T U deviates from the identity by {gap:.3e}")
    return matrix


def eot_orthogonal(
    x_measure: DiscreteMeasure,
    y_measure: DiscreteMeasure,
    U: ArrayLike,
    v: ArrayLike,
    cfg: SinkhornConfig,
    *,
    spec: CostSpec | None = None,
) -> float:
    """OT between U X + v and Y for the squared Euclidean cost.

    Equals OT(X, U^T (Y - v)) plus the second moment of the part of Y - v
    orthogonal to the range of U.
    """

    spec = SqEuclidean() if spec is None else spec
    if type(spec) is not SqEuclidean:
        raise WrongCostVariant(f"orthogonal embedding needs SqEuclidean, got {spec.name}")
    matrix = check_orthogonal(U)
    d, s = matrix.shape
    offset = np.asarray(v, dtype=np.float64).reshape(-1)
    if offset.shape[0] != d or y_measure.dim != d or x_measure.dim != s:
        raise DimensionMismatch(
            f"U is {d}x{s}, v has {offset.shape[0]} entries, measures live in R^{x_measure.dim} and R^{y_measure.dim}"
        )
    centered = y_measure.points - offset[None, :]
    projected = centered @ matrix
    residual = centered - projected @ matrix.T
    reduced = y_measure.push_forward(projected)
    value = sinkhorn_solve(x_measure, reduced, spec, cfg).dual_value
    return value + spec.scale * float(y_measure.weights @ np.sum(residual**2, axis=1))
