"""Plain-text measure files: one atom per line, ``w x1 x2 ... xd``, ``#`` comments."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, List

from eot_lca.common.errors import EotError

from .discrete import DiscreteMeasure, make_measure


class MeasureFormatError(EotError):
    """A measure file could not be parsed."""

    def __init__(self, path: str, line: int, reason: str) -> None:
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line
        self.reason = reason


def parse_measure_lines(lines: Iterable[str], source: str = "<memory>") -> DiscreteMeasure:
    weights: List[float] = []
    rows: List[List[float]] = []
    dim: int | None = None
    last_line = 0
    for lineno, raw in enumerate(lines, start=1):
        last_line = lineno
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        fields = text.split()
        try:
            values = [float(field) for field in fields]
        except ValueError:
            raise MeasureFormatError(source, lineno, f"non-numeric field in {text!r}") from None
        if len(values) < 2:
            raise MeasureFormatError(source, lineno, "expected a weight and at least one coordinate")
        if dim is None:
            dim = len(values) - 1
        elif len(values) - 1 != dim:
            raise MeasureFormatError(
                source, lineno, f"expected {dim} coordinates, found {len(values) - 1}"
            )
        weights.append(values[0])
        rows.append(values[1:])
    if not rows:
        raise MeasureFormatError(source, last_line, "no atoms found")
    try:
        return make_measure(rows, weights)
    except EotError as exc:
        raise MeasureFormatError(source, last_line, str(exc)) from exc


def read_measure_file(path: Path) -> DiscreteMeasure:
    try:
        handle = Path(path).open("r", encoding="utf-8")
    except OSError as exc:
        raise MeasureFormatError(str(path), 0, f"cannot open file: {exc.strerror}") from exc
    with handle:
        return parse_measure_lines(handle, source=str(path))


def format_measure(measure: DiscreteMeasure) -> str:
    lines = [f"# {measure.size} atoms in R^{measure.dim}: weight then coordinates"]
    for weight, point in zip(measure.weights, measure.points):
        fields = [f"{weight:.17g}"] + [f"{value:.17g}" for value in point]
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"
