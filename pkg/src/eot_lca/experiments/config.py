"""Experiment configuration: validation, setting defaults and overrides."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Sequence, Tuple

import yaml

from eot_lca.common.errors import EotError

SETTINGS = ("cube", "surface", "semidiscrete", "sinkhorn_divergence")
COST_VARIANTS = ("sqeuclidean", "l1", "linf")
ESTIMATORS = ("one-sample", "two-sample")

_CUBE_GRID = tuple(range(100, 1001, 100))
_SEMIDISCRETE_GRID = tuple(range(100, 2001, 100))

SETTING_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "cube": {"cost_variant": "sqeuclidean", "normalize": True, "estimator": "two-sample", "n_grid": _CUBE_GRID},
    "surface": {"cost_variant": "sqeuclidean", "normalize": True, "estimator": "two-sample", "n_grid": _CUBE_GRID},
    "semidiscrete": {"cost_variant": "linf", "normalize": False, "estimator": "one-sample", "n_grid": _SEMIDISCRETE_GRID},
    "sinkhorn_divergence": {
        "cost_variant": "sqeuclidean",
        "normalize": True,
        "estimator": "two-sample",
        "n_grid": _CUBE_GRID,
    },
}


class ConfigError(EotError):
    """Experiment configuration is missing, malformed or out of range."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo sweep.

    For the semidiscrete setting ``d1`` is the atom count I of the discrete
    measure and ``d2`` the dimension d. Elsewhere both are dimensions and
    points live in R^(max(d1, d2)).
    """

    setting: str
    d1: int
    d2: int
    eps_list: Tuple[float, ...]
    n_grid: Tuple[int, ...]
    cost_variant: str
    normalize: bool
    estimator: str
    reps: int = 200
    pop_n: int = 3000
    pop_reps: int = 1
    seed: int = 0
    marginal_tol: float = 1e-8
    max_iters: int = 1_000_000
    workers: int = 1
    timing: bool = False
    name: str = ""

    def __post_init__(self) -> None:
        if self.setting not in SETTINGS:
            raise ConfigError(f"unknown setting {self.setting!r}; expected one of {', '.join(SETTINGS)}")
        if self.cost_variant not in COST_VARIANTS:
            raise ConfigError(f"unknown cost_variant {self.cost_variant!r}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.estimator == "one-sample" and self.setting != "semidiscrete":
            raise ConfigError("the one-sample estimator needs the semidiscrete setting")
        if self.setting == "sinkhorn_divergence" and self.cost_variant == "linf":
            raise ConfigError("sinkhorn_divergence supports sqeuclidean and l1 costs")
        for label in ("d1", "d2", "reps", "pop_n", "pop_reps", "max_iters", "workers"):
            value = getattr(self, label)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ConfigError(f"{label} must be a positive integer, got {value!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not self.eps_list:
            raise ConfigError("eps_list must not be empty")
        if any(not (math.isfinite(eps) and eps > 0) for eps in self.eps_list):
            raise ConfigError(f"eps values must be positive, got {list(self.eps_list)}")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid must hold positive sample sizes")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError(f"n_grid must be strictly ascending, got {list(self.n_grid)}")
        if not (math.isfinite(self.marginal_tol) and self.marginal_tol > 0):
            raise ConfigError(f"marginal_tol must be positive, got {self.marginal_tol}")

    @property
    def ambient_dim(self) -> int:
        if self.setting == "semidiscrete":
            return self.d2
        return max(self.d1, self.d2)

    @property
    def cost_scale(self) -> float:
        return 1.0 / self.ambient_dim if self.normalize else 1.0

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, Mapping):
            raise ConfigError("experiment config must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            setting = str(data["setting"])
            payload: Dict[str, Any] = {"setting": setting, "d1": data["d1"], "d2": data["d2"]}
            raw_eps = data["eps_list"]
        except KeyError as exc:  # noqa: B904
            raise ConfigError(f"experiment config is missing {exc.args[0]!r}") from exc
        if setting not in SETTING_DEFAULTS:
            raise ConfigError(f"unknown setting {setting!r}; expected one of {', '.join(SETTINGS)}")
        payload.update(SETTING_DEFAULTS[setting])
        payload.update({key: value for key, value in data.items() if value is not None})
        payload["eps_list"] = _float_tuple(raw_eps, "eps_list")
        payload["n_grid"] = _int_tuple(payload["n_grid"], "n_grid")
        return cls(**_coerce(payload))

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Apply CLI overrides; ``None`` means not given. ``eps`` replaces the grid."""

        changes = {key: value for key, value in overrides.items() if value is not None}
        if "eps" in changes:
            changes["eps_list"] = (float(changes.pop("eps")),)
        if "tol" in changes:
            changes["marginal_tol"] = changes.pop("tol")
        known = {f.name for f in fields(self)}
        unknown = sorted(set(changes) - known)
        if unknown:
            raise ConfigError(f"unknown overrides: {', '.join(unknown)}")
        return replace(self, **_coerce(changes))

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["eps_list"] = list(self.eps_list)
        payload["n_grid"] = list(self.n_grid)
        return payload


def _float_tuple(raw: Any, label: str) -> Tuple[float, ...]:
    values = raw if isinstance(raw, Sequence) and not isinstance(raw, str) else [raw]
    try:
        return tuple(float(value) for value in values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{label} must hold numbers") from exc


def _int_tuple(raw: Any, label: str) -> Tuple[int, ...]:
    values = raw if isinstance(raw, Sequence) and not isinstance(raw, str) else [raw]
    result = []
    for value in values:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{label} must hold integers, got {value!r}")
        result.append(int(value))
    return tuple(result)


def _coerce(payload: Dict[str, Any]) -> Dict[str, Any]:
    """Cast scalar fields to their declared types, reporting bad values as ConfigError."""

    casts = {
        "d1": int,
        "d2": int,
        "reps": int,
        "pop_n": int,
        "pop_reps": int,
        "seed": int,
        "max_iters": int,
        "workers": int,
        "marginal_tol": float,
        "normalize": bool,
        "timing": bool,
        "name": str,
        "cost_variant": str,
        "estimator": str,
    }
    result = dict(payload)
    for key, cast in casts.items():
        if key not in result:
            continue
        value = result[key]
        if cast is int and (isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        if cast is bool and not isinstance(value, bool):
            raise ConfigError(f"{key} must be true or false, got {value!r}")
        try:
            result[key] = cast(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key} has an invalid value {value!r}") from exc
    if "eps_list" in result:
        result["eps_list"] = _float_tuple(result["eps_list"], "eps_list")
    if "n_grid" in result:
        result["n_grid"] = _int_tuple(result["n_grid"], "n_grid")
    return result


def load_config(path: Path) -> ExperimentConfig:
    """Read a YAML (or JSON) experiment config."""

    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    return ExperimentConfig.from_mapping(raw or {})
