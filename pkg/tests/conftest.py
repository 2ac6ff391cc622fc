import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Sequence

import numpy as np
import pytest
import yaml

SRC_PATH = Path(__file__).resolve().parents[1] / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from eot_lca import cli  # noqa: E402  (import after sys.path mutation)
from eot_lca.measure import DiscreteMeasure, format_measure, make_measure  # noqa: E402

MINIMAL_EXPERIMENT: Dict[str, object] = {
    "name": "tiny_cube",
    "setting": "cube",
    "d1": 1,
    "d2": 2,
    "eps_list": [1.0],
    "n_grid": [20],
    "reps": 2,
    "pop_n": 60,
    "seed": 7,
}


@pytest.fixture(autouse=True)
def _fixed_run_id(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("EOT_RUN_ID", "test-run")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def random_measure(rng: np.random.Generator) -> Callable[..., DiscreteMeasure]:
    def _make(n: int, d: int, *, uniform: bool = False, scale: float = 1.0) -> DiscreteMeasure:
        points = scale * rng.random((n, d))
        weights = None if uniform else rng.random(n) + 0.1
        return make_measure(points, weights)

    return _make


@pytest.fixture
def write_measure(tmp_path: Path) -> Callable[[str, DiscreteMeasure], Path]:
    def _write(name: str, measure: DiscreteMeasure) -> Path:
        path = tmp_path / name
        path.write_text(format_measure(measure), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[..., Path]:
    def _write(name: str = "experiment.yml", **overrides: object) -> Path:
        payload = {**MINIMAL_EXPERIMENT, **overrides}
        path = tmp_path / name
        path.write_text(yaml.safe_dump(payload, sort_keys=True), encoding="utf-8")
        return path

    return _write


@dataclass
class ExperimentRunner:
    run: Callable[..., Path]


@pytest.fixture
def experiment_runner(tmp_path: Path, write_config: Callable[..., Path]) -> ExperimentRunner:
    def _invoke(out_name: str = "out", cli_args: Sequence[str] = (), **overrides: object) -> Path:
        out_dir = tmp_path / out_name
        config_path = write_config(**overrides)
        argv: List[str] = ["experiment", str(config_path), "--out", str(out_dir), *cli_args]
        exit_code = cli.main(argv)
        assert exit_code == 0
        return out_dir

    return ExperimentRunner(run=_invoke)
