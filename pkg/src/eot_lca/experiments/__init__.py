"""Monte Carlo harness for the convergence-rate experiments."""

from .analysis import DegenerateFit, RateFit, fit_series, mean_abs_dev, rate_fit, summarize
from .config import ConfigError, ExperimentConfig, load_config
from .io import (
    SchemaMismatch,
    format_records_csv,
    read_records,
    read_records_csv,
    records_frame,
    write_records_csv,
    write_run_manifest,
)
from .plot import plot_csvs, render_rate_plot
from .runner import (
    CSV_COLUMNS,
    EmptyCell,
    ExperimentRecord,
    PopulationEstimate,
    approximate_population,
    population_estimate,
    population_table,
    run_experiment,
)

__all__ = [
    "CSV_COLUMNS",
    "ConfigError",
    "DegenerateFit",
    "EmptyCell",
    "ExperimentConfig",
    "ExperimentRecord",
    "PopulationEstimate",
    "RateFit",
    "SchemaMismatch",
    "approximate_population",
    "fit_series",
    "format_records_csv",
    "load_config",
    "mean_abs_dev",
    "plot_csvs",
    "population_estimate",
    "population_table",
    "rate_fit",
    "read_records",
    "read_records_csv",
    "records_frame",
    "render_rate_plot",
    "run_experiment",
    "summarize",
    "write_records_csv",
    "write_run_manifest",
]
