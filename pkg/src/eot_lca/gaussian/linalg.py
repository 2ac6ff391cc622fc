"""Symmetric eigendecomposition by cyclic Jacobi rotations and PSD square roots."""

from __future__ import annotations

import logging
import math
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike

from eot_lca.common.errors import EotError
from eot_lca.common.logging import log, setup_logger

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10
OFFDIAG_TOL = 1e-13
MAX_SWEEPS = 64

LOGGER = setup_logger("gaussian")


class NotSymmetric(EotError):
    """Matrix is not symmetric within tolerance."""


class NotPSD(EotError):
    """Matrix has an eigenvalue below the clamping threshold."""


def _as_symmetric(S: ArrayLike) -> np.ndarray:
    A = np.array(S, dtype=np.float64, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NotSymmetric("matrix has non-finite entries")
    if A.size:
        scale = max(1.0, float(np.max(np.abs(A))))
        gap = float(np.max(np.abs(A - A.T)))
        if gap > SYMMETRY_TOL * scale:
            raise NotSymmetric(f"matrix deviates from its transpose by {gap:.3e}")
    return 0.5 * (A + A.T)


def _rotate(A: np.ndarray, V: np.ndarray, p: int, q: int) -> None:
    """Zero A[p, q] in place with a plane rotation, accumulating it into V."""

    phi = 0.5 * math.atan2(2.0 * A[p, q], A[q, q] - A[p, p])
    c, s = math.cos(phi), math.sin(phi)
    R = np.array([[c, s], [-s, c]])
    idx = [p, q]
    A[:, idx] = A[:, idx] @ R
    A[idx, :] = R.T @ A[idx, :]
    A[p, q] = A[q, p] = 0.0
    V[:, idx] = V[:, idx] @ R


def _off_norm(A: np.ndarray) -> float:
    return float(np.sqrt(np.sum(A**2) - np.sum(np.diag(A) ** 2)))


def sym_eig(S: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """Return ``(U, lam)`` with S = U diag(lam) U^T and lam descending."""

    A = _as_symmetric(S)
    n = A.shape[0]
    V = np.eye(n)
    target = OFFDIAG_TOL * float(np.linalg.norm(A))
    sweeps = 0
    while n > 1 and _off_norm(A) > target:
        if sweeps >= MAX_SWEEPS:
            log(LOGGER, logging.WARNING, "jacobi_sweep_limit", size=n, off_norm=_off_norm(A))
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] != 0.0:
                    _rotate(A, V, p, q)
        sweeps += 1
    lam = np.diag(A).copy()
    order = np.argsort(-lam, kind="stable")
    return V[:, order], lam[order]


def psd_eig(S: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition with slightly negative eigenvalues clamped to 0."""

    U, lam = sym_eig(S)
    if lam.size:
        floor = -PSD_TOL * max(1.0, float(np.max(np.abs(lam))))
        if float(lam[-1]) < floor:
            raise NotPSD(f"smallest eigenvalue {lam[-1]:.3e} is below {floor:.1e}")
    return U, np.clip(lam, 0.0, None)


def sym_sqrt(S: ArrayLike) -> np.ndarray:
    U, lam = psd_eig(S)
    return (U * np.sqrt(lam)) @ U.T


def low_rank_factor(S: ArrayLike, rank: int | None = None) -> Tuple[np.ndarray, np.ndarray]:
    """U1 (d x s, orthonormal columns) and lam1 with S = U1 diag(lam1) U1^T.

    Without ``rank`` the numerically nonzero eigenvalues are kept.
    """

    U, lam = psd_eig(S)
    if rank is None:
        cutoff = PSD_TOL * max(1.0, float(lam[0])) if lam.size else 0.0
        rank = int(np.sum(lam > cutoff))
    return U[:, :rank], lam[:rank]
