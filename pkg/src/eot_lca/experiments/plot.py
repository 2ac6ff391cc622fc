"""Log-log figures of mean absolute deviation against sample size."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import pandas as pd
from jinja2 import Environment, PackageLoader, select_autoescape

from eot_lca.common.run_meta import atomic_write_text

from .analysis import SERIES_KEYS, RateFit, fit_series, summarize
from .io import SchemaMismatch, read_records

TEMPLATE_NAME = "rate_plot.svg.j2"
WIDTH, HEIGHT = 760, 480
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 250, 40, 60
GUIDE_SLOPE = -0.5
PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#e377c2",
    "#17becf",
)


@dataclass
class Series:
    label: str
    color: str
    points: List[Tuple[float, float]]
    guide: Tuple[Tuple[float, float], Tuple[float, float]]
    slope_text: str = ""
    markers: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def polyline(self) -> str:
        return " ".join(f"{x:.2f},{y:.2f}" for x, y in self.points)


@dataclass
class Tick:
    position: float
    label: str


class _LogAxis:
    def __init__(self, values: Sequence[float], start: float, end: float) -> None:
        logs = [math.log10(v) for v in values]
        low, high = min(logs), max(logs)
        if high - low < 1e-9:
            low, high = low - 0.5, high + 0.5
        pad = 0.05 * (high - low)
        self.low, self.high = low - pad, high + pad
        self.start, self.end = start, end

    def __call__(self, value: float) -> float:
        frac = (math.log10(value) - self.low) / (self.high - self.low)
        return self.start + frac * (self.end - self.start)

    def ticks(self) -> List[Tick]:
        decades = range(math.ceil(self.low), math.floor(self.high) + 1)
        ticks = [Tick(self(10.0**k), f"1e{k}") for k in decades]
        if len(ticks) < 2:
            for exponent in (self.low, self.high):
                value = 10.0**exponent
                ticks.append(Tick(self(value), f"{value:.3g}"))
        return ticks


def _series_label(key: Tuple[str, int, float]) -> str:
    setting, d1, eps = key
    return f"{setting} d1={d1} eps={eps:g}"


def render_rate_plot(summary: pd.DataFrame, fits: Dict[Tuple[str, int, float], RateFit], title: str = "") -> str:
    """SVG with one polyline per (setting, d1, eps) series and -1/2 guides."""

    usable = summary[summary["valid"].astype(bool) & (summary["mean_abs_dev"] > 0)]
    if usable.empty:
        usable = summary[summary["mean_abs_dev"] > 0]
    if usable.empty:
        raise SchemaMismatch("no positive mean absolute deviation to plot")
    x_axis = _LogAxis(usable["n"].astype(float).tolist(), MARGIN_LEFT, WIDTH - MARGIN_RIGHT)
    y_axis = _LogAxis(usable["mean_abs_dev"].astype(float).tolist(), HEIGHT - MARGIN_BOTTOM, MARGIN_TOP)
    n_low, n_high = 10.0**x_axis.low, 10.0**x_axis.high

    series: List[Series] = []
    for index, (key, cells) in enumerate(usable.groupby(SERIES_KEYS, sort=True)):
        typed_key = (str(key[0]), int(key[1]), float(key[2]))
        cells = cells.sort_values("n")
        ns = cells["n"].astype(float).tolist()
        deltas = cells["mean_abs_dev"].astype(float).tolist()
        points = [(x_axis(n), y_axis(delta)) for n, delta in zip(ns, deltas)]
        anchor_n, anchor_delta = ns[0], deltas[0]

        def guide_at(n: float) -> Tuple[float, float]:
            return x_axis(n), y_axis(anchor_delta * (n / anchor_n) ** GUIDE_SLOPE)

        fit = fits.get(typed_key)
        series.append(
            Series(
                label=_series_label(typed_key),
                color=PALETTE[index % len(PALETTE)],
                points=points,
                markers=points,
                guide=(guide_at(n_low), guide_at(n_high)),
                slope_text=f"slope {fit.slope:.2f}" if fit is not None else "",
            )
        )

    env = Environment(
        loader=PackageLoader("eot_lca.experiments", "templates"),
        autoescape=select_autoescape(["svg", "svg.j2", "xml"]),
        trim_blocks=True,
        lstrip_blocks=True,
    )
    template = env.get_template(TEMPLATE_NAME)
    return template.render(
        width=WIDTH,
        height=HEIGHT,
        left=MARGIN_LEFT,
        right=WIDTH - MARGIN_RIGHT,
        top=MARGIN_TOP,
        bottom=HEIGHT - MARGIN_BOTTOM,
        x_ticks=x_axis.ticks(),
        y_ticks=y_axis.ticks(),
        series=series,
        title=title or "mean absolute deviation",
        guide_slope=GUIDE_SLOPE,
    )


def plot_csvs(csv_paths: Sequence[Path], out_path: Path, title: str = "") -> Dict[Tuple[str, int, float], RateFit]:
    """Read record CSVs, aggregate them and write the SVG atomically."""

    summary = summarize(read_records(csv_paths))
    fits = fit_series(summary)
    atomic_write_text(Path(out_path), render_rate_plot(summary, fits, title))
    return fits
