"""Finitely supported probability measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy.spatial.distance import pdist

from eot_lca.common.errors import EotError

WEIGHT_SUM_TOL = 1e-12
CENTER_TOL = 1e-12


class EmptySupport(EotError):
    """The measure has no atoms or no mass."""


class NegativeWeight(EotError):
    """A weight is negative."""


class NonfiniteCoordinate(EotError):
    """A support coordinate or weight is NaN or infinite."""


class BadDimensions(EotError):
    """Shapes or dimension parameters are inconsistent."""


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """n atoms in R^d with probability weights.

    Instances are built through :func:`make_measure`, which validates and
    renormalizes. Both arrays are read-only.
    """

    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def second_moment(self) -> float:
        return float(self.weights @ np.sum(self.points**2, axis=1))

    def drop_null_atoms(self) -> "DiscreteMeasure":
        keep = self.weights > 0
        if bool(np.all(keep)):
            return self
        return make_measure(self.points[keep], self.weights[keep])

    def push_forward(self, points: ArrayLike) -> "DiscreteMeasure":
        """Same weights carried by new (mapped) support points."""

        return make_measure(points, self.weights)

    def same_as(self, other: "DiscreteMeasure") -> bool:
        return (
            self.points.shape == other.points.shape
            and bool(np.array_equal(self.points, other.points))
            and bool(np.array_equal(self.weights, other.weights))
        )


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def make_measure(points: ArrayLike, weights: ArrayLike | None = None) -> DiscreteMeasure:
    """Validate ``points``/``weights`` and return a normalized measure.

    A 1-d ``points`` array is read as n scalar atoms. ``weights=None`` means
    uniform weights.
    """

    pts = np.array(points, dtype=np.float64, copy=True)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2:
        raise BadDimensions(f"points must be an n x d matrix, got shape {pts.shape}")
    n = pts.shape[0]
    if n == 0:
        raise EmptySupport("measure needs at least one atom")
    if not np.all(np.isfinite(pts)):
        raise NonfiniteCoordinate("support coordinates must be finite")

    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.array(weights, dtype=np.float64, copy=True).reshape(-1)
        if w.shape[0] != n:
            raise BadDimensions(f"{n} atoms but {w.shape[0]} weights")
        if not np.all(np.isfinite(w)):
            raise NonfiniteCoordinate("weights must be finite")
        if np.any(w < 0):
            raise NegativeWeight("weights must be nonnegative")
        total = w.sum()
        if total <= 0:
            raise EmptySupport("total mass must be positive")
        w = w / total
    return DiscreteMeasure(points=_freeze(pts), weights=_freeze(w))


def uniform_measure(points: ArrayLike) -> DiscreteMeasure:
    return make_measure(points, None)


def center(m: DiscreteMeasure) -> DiscreteMeasure:
    """Shift the support by its weighted mean.

    A measure is returned unchanged when every coordinate of its mean is at most
    ``CENTER_TOL * max(1, max |x_ij|)``. The threshold grows with the largest
    coordinate, and the shift is refined once, so the residual mean of a
    centered measure sits far below the threshold: ``center(center(m))`` is
    ``center(m)`` even when the offset dwarfs the spread.
    """

    shift = m.mean()
    scale = max(1.0, float(np.max(np.abs(m.points))))
    if float(np.max(np.abs(shift))) <= CENTER_TOL * scale:
        return m
    centered = m.points - shift
    # second pass removes the rounding left by a shift much larger than the spread
    centered = centered - m.weights @ centered
    return DiscreteMeasure(points=_freeze(centered), weights=m.weights)


def diameter(m: DiscreteMeasure) -> float:
    """Euclidean diameter of the support (0 for a single atom)."""

    if m.size == 1:
        return 0.0
    return float(np.max(pdist(m.points)))
