"""Cost specifications, cost matrices and the rescaling transform."""

from .spec import (
    CACHE_BUDGET,
    CacheBudgetExceeded,
    CostMatrix,
    CostSpec,
    Decomposable,
    DimensionMismatch,
    GwBilinear,
    L1,
    LInf,
    NonpositiveScale,
    RescaledProblem,
    SqEuclidean,
    cost_matrix,
    cost_sup,
    eval_cost,
    iter_row_blocks,
    rescale_problem,
    squared_norm,
    zero_cost,
)

__all__ = [
    "CACHE_BUDGET",
    "CacheBudgetExceeded",
    "CostMatrix",
    "CostSpec",
    "Decomposable",
    "DimensionMismatch",
    "GwBilinear",
    "L1",
    "LInf",
    "NonpositiveScale",
    "RescaledProblem",
    "SqEuclidean",
    "cost_matrix",
    "cost_sup",
    "eval_cost",
    "iter_row_blocks",
    "rescale_problem",
    "squared_norm",
    "zero_cost",
]
