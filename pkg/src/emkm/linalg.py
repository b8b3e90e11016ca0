"""Small dense linear algebra for covariance matrices.

Everything here works on symmetric positive-definite matrices of modest
dimension. Factorization goes through Cholesky so that a failed factorization
doubles as the singularity test.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

REG_SCALE = 1e-6
REG_FLOOR = 1e-12


class NotPositiveDefiniteError(ValueError):
    """Raised when a matrix has no Cholesky factor."""


def cholesky(m: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L @ L.T == m.

    Raises NotPositiveDefiniteError for non-PD or non-finite input.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotPositiveDefiniteError("matrix has non-finite entries")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None


def log_det(factor: np.ndarray) -> float:
    """log|m| from the Cholesky factor of m."""
    return 2.0 * float(np.sum(np.log(np.diag(factor))))


def solve(factor: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Solve m @ y = v given the Cholesky factor of m.

    `v` may be a vector of length d or a (d, n) block of right-hand sides.
    """
    w = solve_triangular(factor, v, lower=True, check_finite=False)
    return solve_triangular(factor.T, w, lower=False, check_finite=False)


def mahalanobis_sq(factor: np.ndarray, diffs: np.ndarray) -> np.ndarray:
    """Row-wise (x - mu)^T m^{-1} (x - mu) for an (n, d) block of differences.

    Uses one forward substitution: with m = L L^T the quadratic form is the
    squared norm of L^{-1}(x - mu).
    """
    z = solve_triangular(factor, diffs.T, lower=True, check_finite=False)
    return np.einsum("ij,ij->j", z, z)


def inverse_factor(factor: np.ndarray) -> np.ndarray:
    """L^{-1} by forward substitution against the identity."""
    d = factor.shape[0]
    return solve_triangular(factor, np.eye(d), lower=True, check_finite=False)


def mahalanobis_sq_many(inv_factors: np.ndarray, centres: np.ndarray,
                        data: np.ndarray) -> np.ndarray:
    """(N, k) squared Mahalanobis distances of every point to every centre.

    ``inv_factors`` holds L_j^{-1} for each component. All components are
    handled by one (N, d) x (d, k*d) product; L^{-1}(x - mu) is formed as
    L^{-1}(x - c) - L^{-1}(mu - c) with c the mean of the centres, which
    keeps the cancellation small for data far from the origin.
    """
    k, d, _ = inv_factors.shape
    n = data.shape[0]
    ref = centres.mean(axis=0)
    z = (data - ref) @ inv_factors.transpose(2, 0, 1).reshape(d, k * d)
    z -= np.einsum("kab,kb->ka", inv_factors, centres - ref).reshape(k * d)
    z = z.reshape(n, k, d)
    return np.einsum("nkd,nkd->nk", z, z)


def regularize(m: np.ndarray) -> np.ndarray:
    """Return m + eps*I with eps = max(1e-6 * trace/d, 1e-12)."""
    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    eps = max(REG_SCALE * float(np.trace(m)) / d, REG_FLOOR)
    out = m + eps * np.eye(d)
    # keep exact symmetry; round-off in callers can leave the triangles apart
    return 0.5 * (out + out.T)


def factorize(m: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky factor and log-determinant, regularizing once on failure."""
    try:
        L = cholesky(m)
    except NotPositiveDefiniteError:
        L = cholesky(regularize(m))
    return L, log_det(L)
