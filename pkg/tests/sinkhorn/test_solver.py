import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment, minimize
from scipy.special import logsumexp

from eot_lca.common.errors import NotConverged
from eot_lca.cost import L1, CacheBudgetExceeded, SqEuclidean, cost_matrix, cost_sup, rescale_problem
from eot_lca.measure import make_measure
from eot_lca.sinkhorn import (
    LengthMismatch,
    SinkhornConfig,
    SolverConfigError,
    entropic_transform,
    iter_plan_rows,
    iteration_budget,
    marginal_tv_error,
    plan,
    sinkhorn_solve,
    stability_error_bound,
)

TWO_POINT_VALUE = math.log(2.0 * math.e / (1.0 + math.e))
TWO_POINT_DIAGONAL = math.e / (2.0 * (1.0 + math.e))


@pytest.fixture
def binary_uniform():
    return make_measure([[0.0], [1.0]])


def test_identical_point_masses():
    delta = make_measure([[0.0, 0.0]])

    sol = sinkhorn_solve(delta, delta, SqEuclidean(), SinkhornConfig(eps=1.0))

    assert sol.dual_value == 0.0
    assert sol.iterations == 1
    assert sol.converged


def test_point_mass_source_has_product_coupling(random_measure):
    x = np.array([[0.3, 0.9]])
    nu = random_measure(6, 2)
    spec = SqEuclidean()

    sol = sinkhorn_solve(make_measure(x), nu, spec, SinkhornConfig(eps=0.1))

    expected = float(nu.weights @ cost_matrix(spec, x, nu.points).values[0])
    assert sol.converged
    assert sol.dual_value == pytest.approx(expected, abs=1e-10)
    assert sol.kl == pytest.approx(0.0, abs=1e-10)


def test_two_point_instance_matches_closed_form(binary_uniform):
    cfg = SinkhornConfig(eps=1.0, marginal_tol=1e-12)

    sol = sinkhorn_solve(binary_uniform, binary_uniform, L1(), cfg)

    assert sol.converged
    assert sol.dual_value == pytest.approx(TWO_POINT_VALUE, abs=1e-10)
    assert sol.primal_value == pytest.approx(TWO_POINT_VALUE, abs=1e-9)
    coupling = plan(sol, binary_uniform, binary_uniform, L1())
    np.testing.assert_allclose(np.diag(coupling), [TWO_POINT_DIAGONAL] * 2, atol=1e-10)
    np.testing.assert_allclose(coupling.sum(), 1.0, atol=1e-12)


def test_single_pair_plan_is_unit_mass():
    mu, nu = make_measure([[1.0]]), make_measure([[4.0]])

    sol = sinkhorn_solve(mu, nu, SqEuclidean(), SinkhornConfig(eps=0.5))

    np.testing.assert_allclose(plan(sol, mu, nu, SqEuclidean()), [[1.0]])


@pytest.mark.parametrize(
    ("marginal", "target", "expected"),
    [
        ([0.3, 0.7], [0.3, 0.7], 0.0),
        ([1.0, 0.0], [0.0, 1.0], 2.0),
        ([0.6, 0.4], [0.5, 0.5], 0.2),
    ],
)
def test_marginal_tv_error(marginal, target, expected):
    assert marginal_tv_error(marginal, target) == pytest.approx(expected)


def test_marginal_tv_error_length_mismatch():
    with pytest.raises(LengthMismatch):
        marginal_tv_error([1.0], [0.5, 0.5])


def test_dual_trace_is_nondecreasing(random_measure):
    mu, nu = random_measure(15, 2), random_measure(12, 2)

    sol = sinkhorn_solve(mu, nu, SqEuclidean(), SinkhornConfig(eps=0.05))

    steps = np.diff(sol.dual_trace)
    assert len(sol.dual_trace) == sol.iterations
    assert np.all(steps >= -1e-12)
    assert sol.dual_trace[-1] == sol.dual_value


def test_duality_gap_closes_at_convergence(random_measure):
    mu, nu = random_measure(20, 3), random_measure(25, 3)

    sol = sinkhorn_solve(mu, nu, SqEuclidean(), SinkhornConfig(eps=0.1, marginal_tol=1e-11))

    assert sol.converged
    assert sol.primal_value >= sol.dual_value - 1e-9
    assert sol.primal_value - sol.dual_value <= 1e-8
    assert sol.marginal_err_mu <= 1e-10
    assert sol.marginal_err_nu <= 1e-12


@pytest.mark.slow
def test_duality_gap_over_random_instances():
    failures = []
    for instance in range(200):
        local = np.random.default_rng(1000 + instance)
        n, m, d = int(local.integers(2, 101)), int(local.integers(2, 101)), int(local.integers(1, 3))
        mu = make_measure(local.random((n, d)), local.random(n) + 0.05)
        nu = make_measure(local.random((m, d)), local.random(m) + 0.05)
        eps = float(np.exp(local.uniform(np.log(0.05), np.log(5.0))))

        sol = sinkhorn_solve(mu, nu, SqEuclidean(), SinkhornConfig(eps=eps, marginal_tol=1e-8))

        if not sol.converged or abs(sol.dual_value - sol.primal_value) > 1e-6 * (1.0 + abs(sol.dual_value)):
            failures.append((instance, eps, sol.dual_value, sol.primal_value))

    assert failures == []


def test_value_sits_between_unregularized_and_independent_costs(random_measure):
    mu, nu = random_measure(10, 2, uniform=True), random_measure(10, 2, uniform=True)
    spec = SqEuclidean()
    costs = cost_matrix(spec, mu.points, nu.points).values

    sol = sinkhorn_solve(mu, nu, spec, SinkhornConfig(eps=0.05, marginal_tol=1e-10))

    rows, cols = linear_sum_assignment(costs)
    unregularized = float(costs[rows, cols].mean())
    independent = float(mu.weights @ costs @ nu.weights)
    assert unregularized - 1e-9 <= sol.dual_value <= independent + 1e-9


def test_rescaled_problem_recovers_value():
    mu = make_measure([[0.0], [1.5]], [0.4, 0.6])
    nu = make_measure([[0.5], [2.0]], [0.7, 0.3])
    spec = SqEuclidean()
    eps = 0.8
    cfg = SinkhornConfig(eps=eps, marginal_tol=1e-12)

    direct = sinkhorn_solve(mu, nu, spec, cfg).dual_value
    problem = rescale_problem(spec, eps, 2.5, shift=0.75)
    scaled = sinkhorn_solve(mu, nu, problem.spec, cfg.with_eps(problem.eps)).dual_value

    assert problem.recover(scaled) == pytest.approx(direct, abs=1e-9)


@pytest.mark.parametrize("instance", range(100))
def test_rescaling_identity_over_random_instances(instance):
    local = np.random.default_rng(5000 + instance)
    n, m, d = int(local.integers(1, 13)), int(local.integers(1, 13)), int(local.integers(1, 4))
    mu = make_measure(local.random((n, d)), local.random(n) + 0.05)
    nu = make_measure(local.random((m, d)), local.random(m) + 0.05)
    base = SqEuclidean() if instance % 2 else L1()
    factor, offset = float(local.uniform(0.2, 5.0)), float(local.uniform(-1.0, 1.0))
    eps = float(local.uniform(0.1, 2.0))
    cfg = SinkhornConfig(eps=eps, marginal_tol=1e-10)

    shrunk = sinkhorn_solve(mu, nu, base, cfg.with_eps(eps / factor)).dual_value
    affine = replace(base, scale=factor, shift=offset)
    direct = sinkhorn_solve(mu, nu, affine, cfg).dual_value

    assert factor * shrunk + offset == pytest.approx(direct, abs=1e-8)


def test_balanced_potentials_keep_dual_value(random_measure):
    mu, nu = random_measure(8, 1), random_measure(5, 1)
    sol = sinkhorn_solve(mu, nu, SqEuclidean(), SinkhornConfig(eps=0.2))

    balanced = sol.potentials.balanced(mu, nu)

    assert float(mu.weights @ balanced.phi) == pytest.approx(float(nu.weights @ balanced.psi))
    total = float(mu.weights @ balanced.phi + nu.weights @ balanced.psi)
    assert total == pytest.approx(sol.dual_value, abs=1e-12)


def test_streaming_solve_matches_dense(random_measure):
    mu, nu = random_measure(30, 2), random_measure(20, 2)
    cfg = SinkhornConfig(eps=0.1, marginal_tol=1e-10)

    dense = sinkhorn_solve(mu, nu, L1(), cfg)
    streamed = sinkhorn_solve(mu, nu, L1(), SinkhornConfig(eps=0.1, marginal_tol=1e-10, cache_budget=100))

    assert streamed.iterations == dense.iterations
    assert streamed.dual_value == pytest.approx(dense.dual_value, abs=1e-12)
    np.testing.assert_allclose(streamed.potentials.phi, dense.potentials.phi, atol=1e-12)


def test_zero_weight_atoms_do_not_change_value(rng):
    points = rng.random((5, 2))
    nu = make_measure(rng.random((4, 2)))
    with_null = make_measure(points, [0.2, 0.0, 0.3, 0.0, 0.5])
    without = make_measure(points[[0, 2, 4]], [0.2, 0.3, 0.5])
    cfg = SinkhornConfig(eps=0.3, marginal_tol=1e-11)

    sol = sinkhorn_solve(with_null, nu, SqEuclidean(), cfg)
    reference = sinkhorn_solve(without, nu, SqEuclidean(), cfg)

    assert sol.dual_value == pytest.approx(reference.dual_value, abs=1e-12)
    assert sol.potentials.phi.shape == (5,)
    expected_phi = entropic_transform(reference.potentials.psi, nu, points, SqEuclidean(), 0.3, source_is_mu=False)
    np.testing.assert_allclose(sol.potentials.phi, expected_phi, atol=1e-9)


def test_iteration_cap_reports_not_converged(random_measure):
    mu, nu = random_measure(20, 2), random_measure(20, 2)

    sol = sinkhorn_solve(mu, nu, SqEuclidean(), SinkhornConfig(eps=1e-3, max_iters=2))

    assert not sol.converged
    assert sol.iterations == 2
    with pytest.raises(NotConverged):
        sol.raise_for_status()


def test_plan_rows_stream_the_dense_plan(random_measure):
    mu, nu = random_measure(9, 2), random_measure(6, 2)
    sol = sinkhorn_solve(mu, nu, SqEuclidean(), SinkhornConfig(eps=0.2))

    dense = plan(sol, mu, nu, SqEuclidean())
    streamed = np.vstack([block for _, block in iter_plan_rows(sol, mu, nu, SqEuclidean(), block_entries=12)])

    np.testing.assert_allclose(streamed, dense, rtol=1e-12)
    with pytest.raises(CacheBudgetExceeded):
        plan(sol, mu, nu, SqEuclidean(), budget=10)


def test_iteration_budget_formula():
    expected = math.floor(2.0 + 20.0 / 0.5 * 2.0 * (3.0 * math.log(100) + 2.0 / 0.25))

    assert iteration_budget(100, 0.25, 2.0, 0.5) == expected
    with pytest.raises(SolverConfigError):
        iteration_budget(100, 0.25, 2.0, 0.0)


def test_stability_bound_scales_with_marginal_error(random_measure):
    mu, nu = random_measure(12, 2), random_measure(12, 2)
    spec = SqEuclidean()
    sol = sinkhorn_solve(mu, nu, spec, SinkhornConfig(eps=0.05, marginal_tol=1e-3))
    sup = cost_sup(spec, mu.points, nu.points)

    assert stability_error_bound(sol, sup) == pytest.approx(5.0 * sup * sol.marginal_err_mu)


def test_config_validation():
    with pytest.raises(SolverConfigError):
        SinkhornConfig(eps=1.0, marginal_tol=0.0)
    with pytest.raises(SolverConfigError):
        SinkhornConfig.from_mapping({"eps": 1.0, "tolerance": 1e-3})

    cfg = SinkhornConfig.from_mapping({"eps": 0.5, "max_iters": 10})

    assert cfg.to_dict()["max_iters"] == 10
    assert cfg.with_eps(2.0).eps == 2.0


def _dual_oracle(a: np.ndarray, b: np.ndarray, C: np.ndarray, eps: float) -> float:
    """Maximize the semi-dual in ``g`` with a generic quasi-Newton method."""

    def negative_semi_dual(g: np.ndarray):
        z = (g[None, :] - C) / eps + np.log(b)[None, :]
        lse = logsumexp(z, axis=1)
        rows = a[:, None] * np.exp(z - lse[:, None])
        value = a @ (-eps * lse) + b @ g
        return -value, -(b - rows.sum(axis=0))

    result = minimize(negative_semi_dual, np.zeros(b.size), jac=True, method="BFGS", options={"gtol": 1e-12})
    return -float(result.fun)


@pytest.mark.parametrize("instance", range(50))
def test_three_by_three_instances_match_generic_optimizer(instance):
    local = np.random.default_rng(100 + instance)
    mu = make_measure(local.random((3, 2)), local.random(3) + 0.2)
    nu = make_measure(local.random((3, 2)), local.random(3) + 0.2)
    eps = float(local.uniform(0.1, 1.0))
    spec = SqEuclidean()

    sol = sinkhorn_solve(mu, nu, spec, SinkhornConfig(eps=eps, marginal_tol=1e-12))

    oracle = _dual_oracle(mu.weights, nu.weights, cost_matrix(spec, mu.points, nu.points).values, eps)
    assert sol.dual_value == pytest.approx(oracle, abs=1e-5)
