"""Log-domain Sinkhorn iterations and solution accessors."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Iterator, Mapping, Tuple

import numpy as np
from numpy.typing import ArrayLike

from eot_lca.common.errors import EotError, NotConverged
from eot_lca.common.logging import log, setup_logger
from eot_lca.cost import CACHE_BUDGET, CacheBudgetExceeded, CostSpec
from eot_lca.measure import DiscreteMeasure

from .kernel import LengthMismatch, LogKernel, check_eps, entropic_transform

LOGGER = setup_logger("sinkhorn")


class SolverConfigError(EotError):
    """Sinkhorn settings outside their valid range."""


@dataclass(frozen=True)
class SinkhornConfig:
    eps: float
    marginal_tol: float = 1e-8
    max_iters: int = 1_000_000
    check_every: int = 10
    cache_budget: int = CACHE_BUDGET

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps", check_eps(self.eps))
        if not (math.isfinite(self.marginal_tol) and self.marginal_tol > 0):
            raise SolverConfigError(f"marginal_tol must be positive, got {self.marginal_tol}")
        if int(self.max_iters) < 1:
            raise SolverConfigError(f"max_iters must be at least 1, got {self.max_iters}")
        if int(self.check_every) < 1:
            raise SolverConfigError(f"check_every must be at least 1, got {self.check_every}")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "SinkhornConfig":
        known = {"eps", "marginal_tol", "max_iters", "check_every", "cache_budget"}
        unknown = set(data) - known
        if unknown:
            raise SolverConfigError(f"unknown solver settings: {sorted(unknown)}")
        if "eps" not in data:
            raise SolverConfigError("solver settings need eps")
        return cls(**{key: data[key] for key in known if key in data})

    def with_eps(self, eps: float) -> "SinkhornConfig":
        return replace(self, eps=eps)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Potentials:
    """Dual pair in cost units; phi lives on the mu support, psi on the nu support."""

    phi: np.ndarray
    psi: np.ndarray

    def balanced(self, mu: DiscreteMeasure, nu: DiscreteMeasure) -> "Potentials":
        """Shift to sum_i w_i phi_i = sum_j v_j psi_j; the dual value is unchanged."""

        delta = 0.5 * (float(mu.weights @ self.phi) - float(nu.weights @ self.psi))
        return Potentials(phi=self.phi - delta, psi=self.psi + delta)


@dataclass(frozen=True, eq=False)
class EotSolution:
    dual_value: float
    primal_value: float
    potentials: Potentials
    iterations: int
    marginal_err_mu: float
    marginal_err_nu: float
    converged: bool
    eps: float
    transport_cost: float = 0.0
    kl: float = 0.0
    dual_trace: Tuple[float, ...] = field(default_factory=tuple)

    def raise_for_status(self) -> "EotSolution":
        if not self.converged:
            raise NotConverged(
                f"Sinkhorn stopped after {self.iterations} iterations with marginal error "
                f"{self.marginal_err_mu:.3e}"
            )
        return self

    def summary(self) -> dict[str, Any]:
        return {
            "dual_value": self.dual_value,
            "primal_value": self.primal_value,
            "transport_cost": self.transport_cost,
            "kl": self.kl,
            "iterations": self.iterations,
            "marginal_err_mu": self.marginal_err_mu,
            "marginal_err_nu": self.marginal_err_nu,
            "converged": self.converged,
            "eps": self.eps,
        }


def marginal_tv_error(marginal: ArrayLike, target: ArrayLike) -> float:
    """l1 distance between a plan marginal and the target weights."""

    p = np.asarray(marginal, dtype=np.float64).reshape(-1)
    q = np.asarray(target, dtype=np.float64).reshape(-1)
    if p.shape != q.shape:
        raise LengthMismatch(f"marginal of length {p.shape[0]} against target of length {q.shape[0]}")
    return float(np.sum(np.abs(p - q)))


def _log_weights(weights: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(weights)


def sinkhorn_solve(
    mu: DiscreteMeasure, nu: DiscreteMeasure, spec: CostSpec, cfg: SinkhornConfig
) -> EotSolution:
    """Alternate phi <- T_nu(psi), psi <- T_mu(phi) from psi = 0.

    Convergence is measured on the mu marginal, the one left behind by the
    last psi update. Its row sums come for free from the next phi update.
    Stopping at ``max_iters`` returns ``converged=False`` instead of raising.
    """

    eps = cfg.eps
    mu_kept, nu_kept = mu.drop_null_atoms(), nu.drop_null_atoms()
    kernel = LogKernel(spec, mu_kept.points, nu_kept.points, eps, budget=cfg.cache_budget)
    a, b = mu_kept.weights, nu_kept.weights
    log_a, log_b = np.log(a), np.log(b)

    def update_phi(psi: np.ndarray) -> np.ndarray:
        return -eps * kernel.reduce_rows(log_b + psi / eps)

    def update_psi(phi: np.ndarray) -> np.ndarray:
        return -eps * kernel.reduce_cols(log_a + phi / eps)

    def dual(phi: np.ndarray, psi: np.ndarray) -> float:
        return float(a @ phi + b @ psi)

    psi = np.zeros(nu_kept.size)
    phi = update_phi(psi)
    psi = update_psi(phi)
    iterations = 1
    trace = [dual(phi, psi)]
    lagging_err = math.inf
    converged = False
    while True:
        phi_next = update_phi(psi)
        if iterations == 1 or iterations % cfg.check_every == 0 or iterations >= cfg.max_iters:
            lagging_err = float(np.sum(a * np.abs(np.expm1((phi - phi_next) / eps))))
            if lagging_err <= cfg.marginal_tol:
                converged = True
                break
            if iterations >= cfg.max_iters or not math.isfinite(lagging_err):
                break
        phi = phi_next
        psi = update_psi(phi)
        iterations += 1
        trace.append(dual(phi, psi))

    transport = 0.0
    kl = 1.0
    rows_mass = np.zeros(mu_kept.size)
    cols_mass = np.zeros(nu_kept.size)
    for rows, block in kernel.row_blocks():
        ratio = block + (phi[rows] / eps)[:, None] + (psi / eps)[None, :]
        pi = np.exp(ratio + log_a[rows][:, None] + log_b[None, :])
        transport += float(np.sum(pi * (-eps * block)))
        kl += float(np.sum(pi * ratio)) - float(np.sum(pi))
        rows_mass[rows] = pi.sum(axis=1)
        cols_mass += pi.sum(axis=0)

    err_mu = marginal_tv_error(rows_mass, a)
    err_nu = marginal_tv_error(cols_mass, b)
    phi_full, psi_full = phi, psi
    if mu_kept.size < mu.size:
        phi_full = entropic_transform(psi, nu_kept, mu.points, spec, eps, source_is_mu=False)
        phi_full[mu.weights > 0] = phi
    if nu_kept.size < nu.size:
        psi_full = entropic_transform(phi, mu_kept, nu.points, spec, eps)
        psi_full[nu.weights > 0] = psi

    solution = EotSolution(
        dual_value=trace[-1],
        primal_value=transport + eps * kl,
        potentials=Potentials(phi=phi_full, psi=psi_full),
        iterations=iterations,
        marginal_err_mu=err_mu,
        marginal_err_nu=err_nu,
        converged=converged,
        eps=eps,
        transport_cost=transport,
        kl=kl,
        dual_trace=tuple(trace),
    )
    if converged:
        log(LOGGER, logging.DEBUG, "sinkhorn_converged", n=mu.size, m=nu.size, eps=eps, iterations=iterations)
    else:
        log(
            LOGGER,
            logging.WARNING,
            "sinkhorn_not_converged",
            n=mu.size,
            m=nu.size,
            eps=eps,
            iterations=iterations,
            marginal_err=lagging_err,
        )
    return solution


def iter_plan_rows(
    sol: EotSolution,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    spec: CostSpec,
    eps: float | None = None,
    *,
    block_entries: int | None = None,
) -> Iterator[Tuple[slice, np.ndarray]]:
    """Stream blocks of pi_ij = w_i v_j exp((phi_i + psi_j - c_ij) / eps)."""

    eps = sol.eps if eps is None else check_eps(eps)
    kwargs = {"budget": 0}
    if block_entries is not None:
        kwargs["block_entries"] = block_entries
    kernel = LogKernel(spec, mu.points, nu.points, eps, **kwargs)
    row_terms = _log_weights(mu.weights) + sol.potentials.phi / eps
    col_terms = _log_weights(nu.weights) + sol.potentials.psi / eps
    for rows, block in kernel.row_blocks():
        yield rows, np.exp(block + row_terms[rows][:, None] + col_terms[None, :])


def plan(
    sol: EotSolution,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    spec: CostSpec,
    eps: float | None = None,
    *,
    budget: int = CACHE_BUDGET,
) -> np.ndarray:
    """Dense coupling; use :func:`iter_plan_rows` above the cache budget."""

    if mu.size * nu.size > budget:
        raise CacheBudgetExceeded(
            f"{mu.size} x {nu.size} plan exceeds the budget of {budget} entries; stream it with iter_plan_rows"
        )
    eps = sol.eps if eps is None else check_eps(eps)
    kernel = LogKernel(spec, mu.points, nu.points, eps, budget=budget)
    row_terms = _log_weights(mu.weights) + sol.potentials.phi / eps
    col_terms = _log_weights(nu.weights) + sol.potentials.psi / eps
    (_, block), = kernel.row_blocks()
    return np.exp(block + row_terms[:, None] + col_terms[None, :])


def iteration_budget(n: int, eps: float, cost_sup: float, K: float) -> int:
    """A-priori Sinkhorn iteration count for a target statistical error K.

    floor(2 + 20 K^-1 |c| (3 log n + eps^-1 |c|)). Reported as a diagnostic;
    the solver itself stops on the marginal error.
    """

    eps = check_eps(eps)
    if n < 1:
        raise SolverConfigError(f"sample size must be at least 1, got {n}")
    if not (math.isfinite(K) and K > 0):
        raise SolverConfigError(f"target error K must be positive, got {K}")
    return int(math.floor(2.0 + 20.0 / K * cost_sup * (3.0 * math.log(n) + cost_sup / eps)))


def stability_error_bound(sol: EotSolution, cost_sup: float) -> float:
    """Bound on |Sinkhorn dual value - exact EOT value|: 5 |c| times the lagging marginal error."""

    return 5.0 * float(cost_sup) * sol.marginal_err_mu
