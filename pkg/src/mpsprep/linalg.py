"""Small linear-algebra helpers shared across the package.

All SVD calls in the package go through :func:`svd_safe` / :func:`svdvals_safe`
so that the occasional LAPACK ``gesdd`` convergence failure on ill-conditioned
matrices falls back to the slower but more robust ``gesvd`` driver.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

# Schmidt values at or below this are treated as exact zeros (rank reduction).
ZERO_FLOOR = 1e-14


def svd_safe(a: np.ndarray):
    """SVD with a gesdd -> gesvd fallback. Returns (U, s, Vh), thin."""
    try:
        return scipy.linalg.svd(a, full_matrices=False, check_finite=False,
                                lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(a, full_matrices=False, check_finite=False,
                                lapack_driver="gesvd")


def svdvals_safe(a: np.ndarray) -> np.ndarray:
    """Singular values only (descending), with driver fallback."""
    try:
        return scipy.linalg.svd(a, compute_uv=False, check_finite=False,
                                lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(a, compute_uv=False, check_finite=False,
                                lapack_driver="gesvd")


def svdvals_stack(a: np.ndarray) -> np.ndarray:
    """Singular values of a stack of matrices, shape (..., m, n) -> (..., k).

    numpy's gufunc loops over the leading axes in C, which is noticeably
    faster than a Python loop for the many small SVDs of the gate optimizer.
    """
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError:
        return np.stack([svdvals_safe(m) for m in a.reshape(-1, *a.shape[-2:])]
                        ).reshape(*a.shape[:-2], -1)


def pinv_diag(values: np.ndarray, floor: float = ZERO_FLOOR) -> np.ndarray:
    """Entrywise pseudo-inverse of a nonnegative vector with a hard floor.

    Values at or below ``floor`` map to 0: they signal rank reduction and
    must not be inverted.
    """
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    big = values > floor
    out[big] = 1.0 / values[big]
    return out


def dag(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T
