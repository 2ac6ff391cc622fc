"""Debiased Sinkhorn divergence."""

from __future__ import annotations

from typing import Tuple

from eot_lca.cost import CostSpec
from eot_lca.measure import DiscreteMeasure

from .projective import WrongCostVariant
from .solver import EotSolution, SinkhornConfig, sinkhorn_solve


def sinkhorn_divergence_terms(
    mu: DiscreteMeasure, nu: DiscreteMeasure, spec: CostSpec, cfg: SinkhornConfig
) -> Tuple[float, Tuple[EotSolution, EotSolution, EotSolution]]:
    """Divergence value plus the cross and the two self solutions."""

    if not spec.symmetric:
        raise WrongCostVariant(f"Sinkhorn divergence needs a symmetric cost, got {spec.name}")
    cross = sinkhorn_solve(mu, nu, spec, cfg)
    self_mu = sinkhorn_solve(mu, mu, spec, cfg)
    self_nu = sinkhorn_solve(nu, nu, spec, cfg)
    value = cross.dual_value - 0.5 * (self_mu.dual_value + self_nu.dual_value)
    return value, (cross, self_mu, self_nu)


def sinkhorn_divergence(
    mu: DiscreteMeasure, nu: DiscreteMeasure, spec: CostSpec, cfg: SinkhornConfig
) -> float:
    """S(mu, nu) = OT(mu, nu) - OT(mu, mu) / 2 - OT(nu, nu) / 2."""

    value, _ = sinkhorn_divergence_terms(mu, nu, spec, cfg)
    return value
