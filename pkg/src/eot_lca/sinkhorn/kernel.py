"""Log-domain Gibbs kernel and the entropic (c, eps)-transform."""

from __future__ import annotations

import math
from typing import Iterator, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import logsumexp

from eot_lca.common.errors import EotError
from eot_lca.cost import CACHE_BUDGET, CostSpec, cost_matrix, iter_row_blocks
from eot_lca.cost.spec import STREAM_BLOCK_ENTRIES
from eot_lca.measure import DiscreteMeasure


class NonpositiveEps(EotError):
    """Regularization strength must be strictly positive."""


class LengthMismatch(EotError):
    """Paired vectors have different lengths."""


def check_eps(eps: float) -> float:
    eps = float(eps)
    if not (math.isfinite(eps) and eps > 0):
        raise NonpositiveEps(f"eps must be positive, got {eps}")
    return eps


class LogKernel:
    """The matrix G = -C / eps between row points x and column points y.

    Small problems keep G dense. Above the cache budget G is recomputed in
    blocks on every reduction, rows for row reductions and columns for
    column reductions, so each output entry sees the same terms.
    """

    def __init__(
        self,
        spec: CostSpec,
        x: ArrayLike,
        y: ArrayLike,
        eps: float,
        *,
        budget: int = CACHE_BUDGET,
        block_entries: int = STREAM_BLOCK_ENTRIES,
    ) -> None:
        self.spec = spec
        self.eps = check_eps(eps)
        self.x = np.asarray(x, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.float64)
        self.shape = (self.x.shape[0], self.y.shape[0])
        self.block_entries = block_entries
        spec.check_dims(self.x.shape[1], self.y.shape[1])
        if self.shape[0] * self.shape[1] <= budget:
            self._dense: np.ndarray | None = -cost_matrix(spec, self.x, self.y, budget=budget).values / self.eps
        else:
            self._dense = None

    @property
    def streaming(self) -> bool:
        return self._dense is None

    def row_blocks(self) -> Iterator[Tuple[slice, np.ndarray]]:
        if self._dense is not None:
            yield slice(0, self.shape[0]), self._dense
            return
        for rows, block in iter_row_blocks(self.spec, self.x, self.y, block_entries=self.block_entries):
            yield rows, -block / self.eps

    def col_blocks(self) -> Iterator[Tuple[slice, np.ndarray]]:
        if self._dense is not None:
            yield slice(0, self.shape[1]), self._dense
            return
        step = max(1, self.block_entries // max(1, self.shape[0]))
        for start in range(0, self.shape[1], step):
            cols = slice(start, min(start + step, self.shape[1]))
            yield cols, -self.spec.pairwise(self.x, self.y[cols]) / self.eps

    def reduce_rows(self, g: np.ndarray) -> np.ndarray:
        """log sum_j exp(g_j + G_ij) for every row i."""

        out = np.empty(self.shape[0])
        for rows, block in self.row_blocks():
            out[rows] = logsumexp(block + g[None, :], axis=1)
        return out

    def reduce_cols(self, f: np.ndarray) -> np.ndarray:
        """log sum_i exp(f_i + G_ij) for every column j."""

        out = np.empty(self.shape[1])
        for cols, block in self.col_blocks():
            out[cols] = logsumexp(block + f[:, None], axis=0)
        return out


def entropic_transform(
    f: ArrayLike,
    source: DiscreteMeasure,
    target_points: ArrayLike,
    spec: CostSpec,
    eps: float,
    *,
    source_is_mu: bool = True,
) -> np.ndarray:
    """f^(c,eps)(y) = -eps log sum_i w_i exp((f_i - c(x_i, y)) / eps).

    With ``source_is_mu`` the source atoms are the first cost argument,
    otherwise the second. Zero-weight source atoms are skipped.
    """

    eps = check_eps(eps)
    values = np.asarray(f, dtype=np.float64).reshape(-1)
    if values.shape[0] != source.size:
        raise LengthMismatch(
            f"potential has {values.shape[0]} entries for a source of {source.size} atoms"
        )
    keep = source.weights > 0
    points = source.points[keep]
    log_w = np.log(source.weights[keep]) + values[keep] / eps
    targets = np.asarray(target_points, dtype=np.float64)
    if targets.ndim == 1:
        targets = targets.reshape(-1, source.dim)
    if source_is_mu:
        kernel = LogKernel(spec, points, targets, eps)
        return -eps * kernel.reduce_cols(log_w)
    kernel = LogKernel(spec, targets, points, eps)
    return -eps * kernel.reduce_rows(log_w)
