"""Record CSV and run manifest persistence."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, List, Sequence

import pandas as pd

from eot_lca import __version__
from eot_lca.common.errors import EotError
from eot_lca.common.run_meta import atomic_write_text, update_manifest

from .config import ExperimentConfig
from .runner import CSV_COLUMNS, ExperimentRecord, PopulationEstimate

LEGACY_COLUMNS = CSV_COLUMNS[:-1]
FLOAT_FORMAT = "%.17g"


class SchemaMismatch(EotError):
    """A CSV does not carry the experiment record schema."""


def records_frame(records: Iterable[ExperimentRecord]) -> pd.DataFrame:
    return pd.DataFrame([record.to_row() for record in records], columns=CSV_COLUMNS)


def format_records_csv(records: Iterable[ExperimentRecord]) -> str:
    frame = records_frame(records)
    frame["converged"] = frame["converged"].map({True: "true", False: "false"})
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_records_csv(path: Path, records: Iterable[ExperimentRecord]) -> Path:
    return atomic_write_text(Path(path), format_records_csv(records))


def read_records_csv(path: Path) -> pd.DataFrame:
    """Load one record CSV, accepting files written without ``potential_var``."""

    try:
        frame = pd.read_csv(path, dtype={"setting": str}, float_precision="round_trip")
    except FileNotFoundError as exc:
        raise SchemaMismatch(f"{path}: file not found") from exc
    except pd.errors.EmptyDataError as exc:
        raise SchemaMismatch(f"{path}: file is empty") from exc
    columns = list(frame.columns)
    if columns == LEGACY_COLUMNS:
        frame["potential_var"] = float("nan")
    elif columns != CSV_COLUMNS:
        raise SchemaMismatch(f"{path}: expected columns {','.join(CSV_COLUMNS)}, got {','.join(columns)}")
    if frame.empty:
        raise SchemaMismatch(f"{path}: no data rows")
    converged = frame["converged"].astype(str).str.lower()
    if not converged.isin(["true", "false"]).all():
        raise SchemaMismatch(f"{path}: converged column must hold true/false")
    frame["converged"] = converged == "true"
    return frame


def read_records(paths: Sequence[Path]) -> pd.DataFrame:
    if not paths:
        raise SchemaMismatch("no CSV files given")
    frames: List[pd.DataFrame] = [read_records_csv(path) for path in paths]
    return pd.concat(frames, ignore_index=True)


def write_run_manifest(
    out_dir: Path,
    cfg: ExperimentConfig,
    populations: Sequence[PopulationEstimate],
    records: Sequence[ExperimentRecord],
) -> dict:
    """Echo the config, the population values and failure counts into the manifest."""

    failures = {}
    for eps in cfg.eps_list:
        failures[repr(eps)] = sum(1 for record in records if record.eps == eps and not record.converged)
    return update_manifest(
        Path(out_dir),
        config=cfg.to_dict(),
        master_seed=cfg.seed,
        populations=[entry.to_dict() for entry in populations],
        failure_counts=failures,
        records=len(records),
        population_note="abs_dev is measured against the Monte Carlo population approximation",
        artifact_version=__version__,
    )
