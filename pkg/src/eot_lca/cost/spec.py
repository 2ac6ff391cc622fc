"""Declarative cost functions and their evaluation.

Every variant evaluates ``scale * base(x, y) + shift``. Pairwise evaluation
goes through one vectorized kernel, so a single pair and a full matrix use
the same arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.spatial.distance import cdist

from eot_lca.common.errors import EotError

# Dense matrices up to this many entries; larger problems are streamed by rows.
CACHE_BUDGET = 16_000_000
STREAM_BLOCK_ENTRIES = 2_000_000


class DimensionMismatch(EotError):
    """Point dimensions do not fit the cost variant."""


class CacheBudgetExceeded(EotError):
    """The dense cost matrix would exceed the cache budget."""


class NonpositiveScale(EotError):
    """A scale factor is not strictly positive."""


def _as_points(points: ArrayLike) -> np.ndarray:
    array = np.asarray(getattr(points, "points", points), dtype=np.float64)
    if array.ndim == 1:
        array = array.reshape(1, -1)
    return array


@dataclass(frozen=True, kw_only=True, eq=False)
class CostSpec:
    scale: float = 1.0
    shift: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise NonpositiveScale(f"cost scale must be positive, got {self.scale}")
        if not math.isfinite(self.shift):
            raise DimensionMismatch("cost shift must be finite")

    @property
    def name(self) -> str:
        return type(self).__name__

    @property
    def symmetric(self) -> bool:
        return False

    def check_dims(self, dx: int, dy: int) -> None:
        if dx != dy:
            raise DimensionMismatch(f"{self.name} needs equal dimensions, got {dx} and {dy}")

    def base_matrix(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def pairwise(self, x: ArrayLike, y: ArrayLike) -> np.ndarray:
        """Dense ``scale * base + shift`` over all pairs, no budget check."""

        xs, ys = _as_points(x), _as_points(y)
        self.check_dims(xs.shape[1], ys.shape[1])
        return self.scale * self.base_matrix(xs, ys) + self.shift

    def rescaled(self, factor: float, offset: float = 0.0) -> "CostSpec":
        """The cost ``(c - offset) / factor``."""

        if not (math.isfinite(factor) and factor > 0):
            raise NonpositiveScale(f"rescaling factor must be positive, got {factor}")
        return replace(self, scale=self.scale / factor, shift=(self.shift - offset) / factor)


@dataclass(frozen=True, kw_only=True, eq=False)
class SqEuclidean(CostSpec):
    @property
    def symmetric(self) -> bool:
        return True

    def base_matrix(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return cdist(x, y, "sqeuclidean")


@dataclass(frozen=True, kw_only=True, eq=False)
class L1(CostSpec):
    @property
    def symmetric(self) -> bool:
        return True

    def base_matrix(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return cdist(x, y, "cityblock")


@dataclass(frozen=True, kw_only=True, eq=False)
class LInf(CostSpec):
    @property
    def symmetric(self) -> bool:
        return True

    def base_matrix(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return cdist(x, y, "chebyshev")


@dataclass(frozen=True, kw_only=True, eq=False)
class GwBilinear(CostSpec):
    """c_A(x, y) = -4 |x|^2 |y|^2 - 32 x^T A y for x in R^s, y in R^d."""

    A: np.ndarray = field(default_factory=lambda: np.zeros((1, 1)))

    def __post_init__(self) -> None:
        super().__post_init__()
        matrix = np.array(self.A, dtype=np.float64, copy=True)
        if matrix.ndim != 2:
            raise DimensionMismatch("A must be an s x d matrix")
        matrix.setflags(write=False)
        object.__setattr__(self, "A", matrix)

    def check_dims(self, dx: int, dy: int) -> None:
        s, d = self.A.shape
        if (dx, dy) != (s, d):
            raise DimensionMismatch(f"GwBilinear with A of shape {s}x{d} got points of dims {dx}, {dy}")

    def base_matrix(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        nx = np.sum(x**2, axis=1)
        ny = np.sum(y**2, axis=1)
        return -4.0 * np.outer(nx, ny) - 32.0 * ((x @ self.A) @ y.T)


def squared_norm(y: np.ndarray) -> np.ndarray:
    """Row-wise |y|^2, the residual cost of the cube setting."""

    return np.sum(y**2, axis=1)


def zero_cost(y: np.ndarray) -> np.ndarray:
    return np.zeros(y.shape[0])


@dataclass(frozen=True, kw_only=True, eq=False)
class Decomposable(CostSpec):
    """c(x, (y1, y2)) = c1(x, y1) + c2(y2), y split at column ``split``.

    ``c2`` maps an m x k array of y2 rows to m values; module-level functions
    keep the spec picklable.
    """

    c1: CostSpec = field(default_factory=SqEuclidean)
    c2: Callable[[np.ndarray], np.ndarray] = squared_norm
    split: int = 1

    def check_dims(self, dx: int, dy: int) -> None:
        if not 0 <= self.split <= dy:
            raise DimensionMismatch(f"split index {self.split} outside point dimension {dy}")
        self.c1.check_dims(dx, self.split)

    def base_matrix(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        head = self.c1.pairwise(x, y[:, : self.split])
        tail = np.asarray(self.c2(y[:, self.split :]), dtype=np.float64).reshape(-1)
        return head + tail[None, :]


@dataclass(frozen=True, eq=False)
class CostMatrix:
    values: np.ndarray
    source: CostSpec

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def eval_cost(spec: CostSpec, x: ArrayLike, y: ArrayLike) -> float:
    xs = np.asarray(x, dtype=np.float64).reshape(1, -1)
    ys = np.asarray(y, dtype=np.float64).reshape(1, -1)
    return float(spec.pairwise(xs, ys)[0, 0])


def cost_matrix(
    spec: CostSpec, mu_points: ArrayLike, nu_points: ArrayLike, *, budget: int = CACHE_BUDGET
) -> CostMatrix:
    xs, ys = _as_points(mu_points), _as_points(nu_points)
    entries = xs.shape[0] * ys.shape[0]
    if entries > budget:
        raise CacheBudgetExceeded(
            f"{xs.shape[0]} x {ys.shape[0]} cost matrix exceeds the budget of {budget} entries"
        )
    values = spec.pairwise(xs, ys)
    if not np.all(np.isfinite(values)):
        raise DimensionMismatch("cost evaluation produced non-finite values")
    values.setflags(write=False)
    return CostMatrix(values=values, source=spec)


def iter_row_blocks(
    spec: CostSpec,
    mu_points: ArrayLike,
    nu_points: ArrayLike,
    *,
    block_entries: int = STREAM_BLOCK_ENTRIES,
) -> Iterator[Tuple[slice, np.ndarray]]:
    """Yield ``(rows, C[rows, :])`` without materializing the full matrix."""

    xs, ys = _as_points(mu_points), _as_points(nu_points)
    step = max(1, block_entries // max(1, ys.shape[0]))
    for start in range(0, xs.shape[0], step):
        rows = slice(start, min(start + step, xs.shape[0]))
        yield rows, spec.pairwise(xs[rows], ys)


def cost_sup(spec: CostSpec, mu_points: ArrayLike, nu_points: ArrayLike) -> float:
    """max |c(x_i, y_j)| over the two supports."""

    return max(float(np.max(np.abs(block))) for _, block in iter_row_blocks(spec, mu_points, nu_points))


@dataclass(frozen=True, eq=False)
class RescaledProblem:
    """A cost/regularization pair mapped by c' = (c - offset)/factor, eps' = eps/factor.

    Solving the primed problem and applying :meth:`recover` gives the EOT
    value of the original problem.
    """

    spec: CostSpec
    eps: float
    factor: float
    offset: float

    def recover(self, value: float) -> float:
        return self.factor * value + self.offset


def rescale_problem(spec: CostSpec, eps: float, bound: float, shift: float = 0.0) -> RescaledProblem:
    if not (math.isfinite(bound) and bound > 0):
        raise NonpositiveScale(f"rescaling bound must be positive, got {bound}")
    return RescaledProblem(
        spec=spec.rescaled(bound, shift), eps=eps / bound, factor=bound, offset=shift
    )
