"""Seeded samplers for the simulation population measures.

Every sampler draws from a ``numpy.random.Generator`` backed by the
counter-based Philox bit generator. Stream keys are hashed together with the
master seed by ``numpy.random.SeedSequence``, so a given ``(master, *keys)``
reproduces the same draws on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .discrete import BadDimensions, DiscreteMeasure, make_measure

TRUNCNORM_MEAN = 1.0
TRUNCNORM_SD = 0.4
_UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class Seed:
    master: int

    def __post_init__(self) -> None:
        if not 0 <= int(self.master) <= _UINT64_MAX:
            raise ValueError("master seed must be an unsigned 64-bit integer")

    def stream(self, *keys: int) -> np.random.Generator:
        """Independent generator for the stream identified by ``keys``."""

        entropy = [int(self.master), *(int(k) for k in keys)]
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))

    def child(self, *keys: int) -> "Seed":
        """Derived master seed, for handing a sub-stream family to another component."""

        state = np.random.SeedSequence([int(self.master), *(int(k) for k in keys)])
        return Seed(int(state.generate_state(1, dtype=np.uint64)[0]))


SeedLike = Seed | np.random.Generator | int


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, Seed):
        return seed.stream()
    return Seed(int(seed)).stream()


def sample_cube(d1: int, pad_to: int, n: int, seed: SeedLike) -> DiscreteMeasure:
    """Empirical measure of U([0,1]^d1 x {0}^(pad_to - d1))."""

    if not 1 <= d1 <= pad_to:
        raise BadDimensions(f"need 1 <= d1 <= pad_to, got d1={d1}, pad_to={pad_to}")
    if n < 1:
        raise BadDimensions("n must be positive")
    rng = as_generator(seed)
    points = np.zeros((n, pad_to))
    points[:, :d1] = rng.random((n, d1))
    return make_measure(points)


def sample_truncnorm(
    n: int,
    seed: SeedLike,
    *,
    mean: float = TRUNCNORM_MEAN,
    sd: float = TRUNCNORM_SD,
    low: float = 0.0,
    high: float = 1.0,
) -> np.ndarray:
    """Draws from N(mean, sd^2) conditioned on [low, high], by rejection."""

    if n < 1:
        raise BadDimensions("n must be positive")
    rng = as_generator(seed)
    accepted: list[np.ndarray] = []
    have = 0
    while have < n:
        # acceptance is about 0.49 for the default parameters
        batch = rng.normal(mean, sd, size=2 * (n - have) + 16)
        keep = batch[(batch >= low) & (batch <= high)]
        accepted.append(keep)
        have += keep.shape[0]
    return np.concatenate(accepted)[:n]


def surface_map_t(x: np.ndarray, k: int) -> np.ndarray:
    """x -> (x_1..x_d, x_1^2, ..., x_1^2) with k appended copies."""

    x = np.atleast_2d(x)
    tail = np.repeat(x[:, :1] ** 2, k, axis=1)
    return np.hstack([x, tail])


def surface_map_s(x: np.ndarray, k: int) -> np.ndarray:
    """x -> (x_1..x_d, sqrt(1 - x_1^2), ..., sqrt(1 - x_k^2))."""

    x = np.atleast_2d(x)
    tail = np.sqrt(np.clip(1.0 - x[:, :k] ** 2, 0.0, None))
    return np.hstack([x, tail])


def sample_surface(
    kind: Literal["T", "S"], d: int, k: int, n: int, seed: SeedLike
) -> DiscreteMeasure:
    """Empirical measure on the curved surfaces of the surface setting.

    ``T`` pushes U[0,1]^d through :func:`surface_map_t`; ``S`` pushes the
    product of truncated normals through :func:`surface_map_s`. Only ``S``
    needs k <= d since ``T`` repeats the first coordinate.
    """

    if d < 1 or k < 0 or (kind == "S" and k > d):
        raise BadDimensions(f"need d >= 1 and 0 <= k (k <= d for S), got d={d}, k={k}")
    rng = as_generator(seed)
    if kind == "T":
        return make_measure(surface_map_t(rng.random((n, d)), k))
    if kind == "S":
        draws = sample_truncnorm(n * d, rng).reshape(n, d)
        return make_measure(surface_map_s(draws, k))
    raise BadDimensions(f"unknown surface kind {kind!r}")


def fixed_discrete_support(atoms: int, d: int, seed: SeedLike) -> DiscreteMeasure:
    """Uniform measure on ``atoms`` points drawn once from U[0,1]^d."""

    if atoms < 1 or d < 1:
        raise BadDimensions("atom count and dimension must be positive")
    rng = as_generator(seed)
    return make_measure(rng.random((atoms, d)))


def resample(m: DiscreteMeasure, n: int, seed: SeedLike) -> DiscreteMeasure:
    """Empirical measure of n i.i.d. draws from a discrete measure."""

    rng = as_generator(seed)
    idx = rng.choice(m.size, size=n, p=m.weights)
    return make_measure(m.points[idx])
