import numpy as np
import pytest

from eot_lca.cost import SqEuclidean
from eot_lca.experiments import (
    EmptyCell,
    ExperimentConfig,
    approximate_population,
    format_records_csv,
    population_estimate,
    run_experiment,
)
from eot_lca.experiments.runner import (
    MU_SIDE,
    NU_SIDE,
    SETTING_KEYS,
    STREAM_POPULATION,
    STREAM_SWEEP,
    SweepTask,
    draw_samples,
    estimate,
    fixed_support,
    potential_variance,
    run_task,
)
from eot_lca.measure import Seed, make_measure
from eot_lca.sinkhorn import SinkhornConfig, sinkhorn_solve


def _config(**overrides) -> ExperimentConfig:
    payload = {"setting": "cube", "d1": 1, "d2": 2, "eps_list": [1.0], "n_grid": [10], "reps": 5, "pop_n": 40, "seed": 3}
    payload.update(overrides)
    return ExperimentConfig.from_mapping(payload)


def _streams(cfg: ExperimentConfig, family: int, *keys: int):
    seed = Seed(cfg.seed)
    setting = SETTING_KEYS[cfg.setting]
    return (
        seed.stream(family, setting, *keys, MU_SIDE),
        seed.stream(family, setting, *keys, NU_SIDE),
    )


def test_sweep_yields_one_record_per_repetition():
    cfg = _config()

    records = run_experiment(cfg, [0.0])

    assert len(records) == 5
    assert [record.rep for record in records] == list(range(5))
    for record in records:
        assert record.n == 10
        assert record.converged
        assert record.wall_ms == 0.0
        assert record.abs_dev == pytest.approx(abs(record.estimate))


def test_sweep_order_covers_grid():
    cfg = _config(eps_list=[0.5, 1.0], n_grid=[5, 8], reps=2)

    records = run_experiment(cfg, [0.1, 0.2])

    keys = [(record.eps, record.n, record.rep) for record in records]
    assert keys == [(eps, n, rep) for eps in (0.5, 1.0) for n in (5, 8) for rep in range(2)]


def test_sweep_is_deterministic():
    cfg = _config(reps=3)

    first = format_records_csv(run_experiment(cfg))
    second = format_records_csv(run_experiment(cfg))

    assert first == second


def test_parallel_sweep_matches_serial():
    cfg = _config(reps=4)

    serial = run_experiment(cfg, [0.0])
    parallel = run_experiment(cfg.with_overrides(workers=2), [0.0])

    assert format_records_csv(serial) == format_records_csv(parallel)


def test_population_count_must_match_eps_grid():
    with pytest.raises(EmptyCell):
        run_experiment(_config(eps_list=[0.5, 1.0]), [0.0])


def test_single_population_run_equals_plug_in_estimate():
    cfg = _config(pop_n=25)
    rng_mu, rng_nu = _streams(cfg, STREAM_POPULATION, 0)

    mu, nu = draw_samples(cfg, 25, rng_mu, rng_nu)
    expected = estimate(cfg, mu, nu, 1.0).value

    assert population_estimate(cfg, 1.0).value == expected


def test_population_and_sweep_streams_are_disjoint():
    cfg = _config()
    pop_mu, _ = _streams(cfg, STREAM_POPULATION, 0)
    sweep_mu, _ = _streams(cfg, STREAM_SWEEP, 0, 10, 0)

    assert not np.array_equal(pop_mu.random(10), sweep_mu.random(10))


def test_semidiscrete_point_mass_population_matches_quadrature():
    cfg = _config(setting="semidiscrete", d1=1, d2=1, eps_list=[0.5], pop_n=20_000, reps=1)
    x = float(fixed_support(cfg).points[0, 0])

    value = approximate_population(cfg)

    assert value == pytest.approx((x**2 + (1.0 - x) ** 2) / 2.0, abs=0.01)


def test_semidiscrete_one_sample_keeps_support_exact():
    cfg = _config(setting="semidiscrete", d1=4, d2=3, eps_list=[0.5], reps=1)
    rng_mu, rng_nu = _streams(cfg, STREAM_SWEEP, 0, 10, 0)

    mu, nu = draw_samples(cfg, 10, rng_mu, rng_nu)

    assert mu.same_as(fixed_support(cfg))
    assert nu.points.shape == (10, 3)
    record = run_task(SweepTask(cfg=cfg, eps_index=0, n=10, rep=0, population=0.0))
    assert record.converged


def test_surface_samples_live_in_common_space():
    cfg = _config(setting="surface", d1=1, d2=2)
    rng_mu, rng_nu = _streams(cfg, STREAM_SWEEP, 0, 10, 0)

    mu, nu = draw_samples(cfg, 10, rng_mu, rng_nu)

    assert mu.points.shape == (10, 2)
    assert nu.points.shape == (10, 2)
    np.testing.assert_allclose(mu.points[:, 1], mu.points[:, 0] ** 2)


def test_divergence_setting_sums_iterations():
    cfg = _config(setting="sinkhorn_divergence", d1=2, d2=2, reps=1)

    (record,) = run_experiment(cfg, [0.0])

    assert record.converged
    assert record.iterations >= 3
    assert record.estimate >= -1e-9


def test_potential_variance_skips_fixed_source():
    mu = make_measure([[0.0], [1.0], [3.0]])
    nu = make_measure([[0.5], [2.0]])
    sol = sinkhorn_solve(mu, nu, SqEuclidean(), SinkhornConfig(eps=0.5))

    full = potential_variance(sol, mu, nu)
    target_only = potential_variance(sol, mu, nu, sampled_mu=False)

    phi, psi = sol.potentials.phi, sol.potentials.psi
    assert target_only == pytest.approx(float(np.var(psi)))
    assert full == pytest.approx(float(np.var(phi) + np.var(psi)))
