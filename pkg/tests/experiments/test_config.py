from pathlib import Path

import pytest

from eot_lca.experiments import ConfigError, ExperimentConfig, load_config

CONFIG_DIR = Path(__file__).resolve().parents[2] / "config"
SHIPPED_CONFIGS = [
    "cube_sqeuclidean.yml",
    "cube_l1.yml",
    "surface.yml",
    "semidiscrete.yml",
    "sinkhorn_divergence.yml",
]


def _base(**overrides):
    payload = {"setting": "cube", "d1": 2, "d2": 3, "eps_list": [1.0]}
    payload.update(overrides)
    return payload


def test_setting_defaults_are_applied():
    cube = ExperimentConfig.from_mapping(_base())
    semidiscrete = ExperimentConfig.from_mapping(_base(setting="semidiscrete", d1=10, d2=10))

    assert cube.cost_variant == "sqeuclidean"
    assert cube.normalize is True
    assert cube.estimator == "two-sample"
    assert cube.n_grid == tuple(range(100, 1001, 100))
    assert semidiscrete.cost_variant == "linf"
    assert semidiscrete.normalize is False
    assert semidiscrete.estimator == "one-sample"
    assert semidiscrete.n_grid[-1] == 2000


def test_explicit_values_override_defaults():
    cfg = ExperimentConfig.from_mapping(_base(cost_variant="l1", n_grid=[10, 20], reps=3))

    assert cfg.cost_variant == "l1"
    assert cfg.n_grid == (10, 20)
    assert cfg.reps == 3


def test_cost_scale_follows_ambient_dimension():
    normalized = ExperimentConfig.from_mapping(_base(d1=8, d2=5))
    semidiscrete = ExperimentConfig.from_mapping(_base(setting="semidiscrete", d1=10, d2=4))

    assert normalized.ambient_dim == 8
    assert normalized.cost_scale == pytest.approx(1 / 8)
    assert semidiscrete.ambient_dim == 4
    assert semidiscrete.cost_scale == 1.0


@pytest.mark.parametrize(
    ("payload", "fragment"),
    [
        (_base(colour="red"), "unknown config keys"),
        ({"setting": "cube", "d1": 2, "eps_list": [1.0]}, "missing"),
        (_base(setting="torus"), "unknown setting"),
        (_base(reps=0), "reps"),
        (_base(eps_list=[1.0, -0.5]), "eps values"),
        (_base(n_grid=[200, 100]), "ascending"),
        (_base(estimator="one-sample"), "semidiscrete"),
        (_base(setting="sinkhorn_divergence", cost_variant="linf"), "sinkhorn_divergence"),
        (_base(normalize="yes"), "normalize"),
        (_base(d1=1.5), "d1"),
    ],
)
def test_invalid_configs_are_rejected(payload, fragment):
    with pytest.raises(ConfigError, match=fragment):
        ExperimentConfig.from_mapping(payload)


def test_overrides_map_cli_flags():
    cfg = ExperimentConfig.from_mapping(_base(eps_list=[0.5, 1.0]))

    changed = cfg.with_overrides(eps=2.0, tol=1e-6, reps=4, seed=None)

    assert changed.eps_list == (2.0,)
    assert changed.marginal_tol == 1e-6
    assert changed.reps == 4
    assert changed.seed == cfg.seed
    with pytest.raises(ConfigError):
        cfg.with_overrides(reps=0)


def test_to_dict_round_trips():
    cfg = ExperimentConfig.from_mapping(_base(name="demo", seed=11))

    assert ExperimentConfig.from_mapping(cfg.to_dict()) == cfg


@pytest.mark.parametrize("name", SHIPPED_CONFIGS)
def test_shipped_configs_load(name):
    cfg = load_config(CONFIG_DIR / name)

    assert cfg.name
    assert cfg.reps == 200


def test_load_config_reports_missing_and_malformed_files(tmp_path: Path):
    broken = tmp_path / "broken.yml"
    broken.write_text("setting: [cube\n", encoding="utf-8")

    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.yml")
    with pytest.raises(ConfigError, match="not valid YAML"):
        load_config(broken)
