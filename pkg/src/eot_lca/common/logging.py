"""Structured JSON logging shared by the solvers, the harness and the CLI.

One JSON object per line on stderr, so human reports on stdout stay clean.
Numeric fields may be numpy scalars, arrays or non-finite floats; they are
rendered into strict JSON.
"""

from __future__ import annotations

import json
import logging
import math
import os
import sys
import uuid
from datetime import datetime, timezone
from typing import Any, Dict

RUN_ID_ENV = "EOT_RUN_ID"
LOG_LEVEL_ENV = "EOT_LOG_LEVEL"
_FALLBACK_RUN_ID = uuid.uuid4().hex
_EXTRA_ATTR = "eot_fields"


def get_run_id() -> str:
    return os.getenv(RUN_ID_ENV) or _FALLBACK_RUN_ID


def _level_from_env() -> int:
    name = os.getenv(LOG_LEVEL_ENV, "INFO").upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


def to_json_value(value: Any) -> Any:
    """Map a log field onto something ``json.dumps`` accepts without NaN tokens."""

    if hasattr(value, "ndim") and hasattr(value, "shape"):
        if value.ndim == 0:
            return to_json_value(value.item())
        # potentials and plans are never dumped whole
        finite = value[value == value] if value.size else value
        return {
            "shape": list(value.shape),
            "max_abs": to_json_value(float(abs(finite).max())) if finite.size else None,
        }
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return [to_json_value(item) for item in value]
    if isinstance(value, dict):
        return {str(key): to_json_value(item) for key, item in value.items()}
    return value


class JsonFormatter(logging.Formatter):
    """Render log records as one JSON object carrying component and run id."""

    def __init__(self, component: str, context: Dict[str, Any] | None = None) -> None:
        super().__init__()
        self.component = component
        self._context: Dict[str, Any] = {}
        self.update_context(**(context or {}))

    def update_context(self, **context: Any) -> None:
        self._context.update({key: value for key, value in context.items() if value is not None})

    def format(self, record: logging.LogRecord) -> str:  # type: ignore[override]
        payload: Dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, timezone.utc).isoformat(),
            "level": record.levelname.lower(),
            "message": record.getMessage(),
            "component": self.component,
            "run_id": get_run_id(),
            **self._context,
        }
        fields = getattr(record, _EXTRA_ATTR, None) or {}
        payload.update({key: value for key, value in fields.items() if value is not None})
        if record.exc_info:
            payload["exc_info"] = self.formatException(record.exc_info)
        return json.dumps(to_json_value(payload), ensure_ascii=False)


def setup_logger(component: str, **context: Any) -> logging.Logger:
    """Return ``eot_lca.<component>``, attaching the JSON handler on first use."""

    logger = logging.getLogger(f"eot_lca.{component}")
    formatter = next(
        (h.formatter for h in logger.handlers if isinstance(h.formatter, JsonFormatter)),
        None,
    )
    if formatter is None:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(JsonFormatter(component, context))
        logger.addHandler(handler)
        logger.setLevel(_level_from_env())
        logger.propagate = False
    else:
        formatter.update_context(**context)
    return logger


def log(logger: logging.Logger, level: int, message: str, **fields: Any) -> None:
    """Emit ``message`` as a snake_case event with ``fields`` merged into the JSON object."""

    logger.log(level, message, extra={_EXTRA_ATTR: fields})
