"""Run manifest (``manifest.json``) and atomic artifact writes."""

from __future__ import annotations

import json
import logging
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict

from .errors import EotError
from .logging import get_run_id, log, setup_logger

MANIFEST_NAME = "manifest.json"
STEP_STATUSES = ("running", "completed", "failed")

LOGGER = setup_logger("run_meta")


def manifest_path(out_dir: Path) -> Path:
    return Path(out_dir) / MANIFEST_NAME


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def atomic_write_text(path: Path, text: str) -> Path:
    """Write *text* to *path* through a sibling temp file and ``os.replace``."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return path


def _fresh(**fields: Any) -> Dict[str, Any]:
    return {"run_id": get_run_id(), "started_at": _utc_now(), "steps": {}, **fields}


def _write(out_dir: Path, meta: Dict[str, Any]) -> Dict[str, Any]:
    atomic_write_text(manifest_path(out_dir), json.dumps(meta, ensure_ascii=False, indent=2) + "\n")
    return meta


def load_manifest(out_dir: Path) -> Dict[str, Any]:
    path = manifest_path(out_dir)
    if not path.exists():
        return _fresh()
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        log(LOGGER, logging.WARNING, "manifest_corrupt", path=str(path), error=str(exc))
        return _fresh(warning="previous manifest corrupt")


def start_manifest(out_dir: Path, **fields: Any) -> Dict[str, Any]:
    """Begin a new run in *out_dir*, discarding steps left by an earlier run."""

    return _write(out_dir, _fresh(**{k: v for k, v in fields.items() if v is not None}))


def update_manifest(out_dir: Path, **fields: Any) -> Dict[str, Any]:
    meta = load_manifest(out_dir)
    meta.update({k: v for k, v in fields.items() if v is not None})
    return _write(out_dir, meta)


def record_step(out_dir: Path, step: str, status: str, **fields: Any) -> Dict[str, Any]:
    if status not in STEP_STATUSES:
        raise EotError(f"unknown step status {status!r}; expected one of {', '.join(STEP_STATUSES)}")
    meta = load_manifest(out_dir)
    step_meta = meta.setdefault("steps", {}).setdefault(step, {})
    now = _utc_now()
    if status == "running":
        step_meta["started_at"] = now
    step_meta.update({k: v for k, v in fields.items() if v is not None})
    step_meta["status"] = status
    step_meta["updated_at"] = now
    if status == "failed" or all(s.get("status") == "completed" for s in meta["steps"].values()):
        meta["completed_at"] = now
    else:
        meta.pop("completed_at", None)
    return _write(out_dir, meta)
