"""Cell aggregation and log-log rate regression."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from eot_lca.common.errors import EotError
from eot_lca.common.logging import log, setup_logger

from .runner import EmptyCell, ExperimentRecord

LOGGER = setup_logger("analysis")

MAX_FAILURE_SHARE = 0.05
CELL_KEYS = ["setting", "d1", "d2", "eps", "n"]
SERIES_KEYS = ["setting", "d1", "eps"]


class DegenerateFit(EotError):
    """Too few usable points for a rate regression."""


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float

    def predict(self, n: float) -> float:
        return math.exp(self.intercept) * n**self.slope


def mean_abs_dev(records: Iterable[ExperimentRecord | float]) -> Tuple[float, float]:
    """Mean and standard error of the absolute deviations of one cell.

    Records that did not converge are left out.
    """

    values = []
    for record in records:
        if isinstance(record, ExperimentRecord):
            if record.converged:
                values.append(record.abs_dev)
        else:
            values.append(float(record))
    if not values:
        raise EmptyCell("cell has no converged records")
    array = np.asarray(values, dtype=np.float64)
    if array.size == 1:
        return float(array[0]), 0.0
    return float(array.mean()), float(array.std(ddof=1) / math.sqrt(array.size))


def rate_fit(cells: Sequence[Tuple[float, float]]) -> RateFit:
    """OLS of log(delta) on log(n)."""

    usable = [(float(n), float(delta)) for n, delta in cells if n > 0 and delta > 0 and math.isfinite(delta)]
    if len({n for n, _ in usable}) < 2:
        raise DegenerateFit("need at least two distinct n with positive deviation")
    log_n = np.log([n for n, _ in usable])
    log_delta = np.log([delta for _, delta in usable])
    result = stats.linregress(log_n, log_delta)
    r_squared = float(result.rvalue) ** 2 if math.isfinite(result.rvalue) else 0.0
    return RateFit(slope=float(result.slope), intercept=float(result.intercept), r_squared=r_squared)


def summarize(frame: pd.DataFrame) -> pd.DataFrame:
    """One row per (setting, d1, d2, eps, n) cell.

    Columns: reps, failures, mean_abs_dev, stderr, asymptotic_sd and valid.
    ``asymptotic_sd`` is sqrt(2/pi) * sqrt(mean potential_var / n), the
    deviation a Gaussian fluctuation limit would predict.
    """

    rows = []
    for key, cell in frame.groupby(CELL_KEYS, sort=True):
        converged = cell["converged"].astype(bool)
        failures = int((~converged).sum())
        kept = cell.loc[converged, "abs_dev"].to_numpy(dtype=np.float64)
        if kept.size:
            mean, stderr = mean_abs_dev(kept)
        else:
            mean, stderr = math.nan, math.nan
        n = int(key[4])
        var = float(cell.loc[converged, "potential_var"].mean()) if kept.size else math.nan
        valid = kept.size > 0 and failures <= MAX_FAILURE_SHARE * len(cell)
        if not valid:
            log(
                LOGGER,
                logging.WARNING,
                "experiment_cell_invalid",
                setting=key[0],
                d1=int(key[1]),
                eps=float(key[3]),
                n=n,
                failures=failures,
                reps=len(cell),
            )
        rows.append(
            {
                **dict(zip(CELL_KEYS, key)),
                "reps": len(cell),
                "failures": failures,
                "mean_abs_dev": mean,
                "stderr": stderr,
                "asymptotic_sd": math.sqrt(2.0 / math.pi) * math.sqrt(var / n) if not math.isnan(var) else math.nan,
                "valid": valid,
            }
        )
    return pd.DataFrame(rows)


def fit_series(summary: pd.DataFrame) -> Dict[Tuple[str, int, float], RateFit]:
    """Rate fit per (setting, d1, eps) over the valid cells; degenerate series are skipped."""

    fits: Dict[Tuple[str, int, float], RateFit] = {}
    for key, series in summary.groupby(SERIES_KEYS, sort=True):
        usable = series[series["valid"].astype(bool)]
        try:
            fits[(str(key[0]), int(key[1]), float(key[2]))] = rate_fit(
                list(zip(usable["n"], usable["mean_abs_dev"]))
            )
        except DegenerateFit:
            continue
    return fits
