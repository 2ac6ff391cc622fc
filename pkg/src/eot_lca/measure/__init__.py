"""Discrete measures, seeded samplers and the measure file format."""

from .discrete import (
    BadDimensions,
    DiscreteMeasure,
    EmptySupport,
    NegativeWeight,
    NonfiniteCoordinate,
    center,
    diameter,
    make_measure,
    uniform_measure,
)
from .io import MeasureFormatError, format_measure, parse_measure_lines, read_measure_file
from .sampling import (
    Seed,
    as_generator,
    fixed_discrete_support,
    resample,
    sample_cube,
    sample_surface,
    sample_truncnorm,
    surface_map_s,
    surface_map_t,
)

__all__ = [
    "BadDimensions",
    "DiscreteMeasure",
    "EmptySupport",
    "MeasureFormatError",
    "NegativeWeight",
    "NonfiniteCoordinate",
    "Seed",
    "as_generator",
    "center",
    "diameter",
    "fixed_discrete_support",
    "format_measure",
    "make_measure",
    "parse_measure_lines",
    "read_measure_file",
    "resample",
    "sample_cube",
    "sample_surface",
    "sample_truncnorm",
    "surface_map_s",
    "surface_map_t",
    "uniform_measure",
]
