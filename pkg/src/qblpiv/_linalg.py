"""Small dense linear-algebra helpers shared across the package."""
from __future__ import annotations

import numpy as np
from scipy.linalg import lapack, solve_triangular

# Ridge multiples of trace(A)/n tried after a plain factorization fails.
JITTER_LADDER = (1e-10, 1e-8, 1e-6)


class FactorizationError(np.linalg.LinAlgError):
    """Raised when a matrix cannot be made positive definite with the jitter ladder."""


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def cholesky_jitter(a: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``a``, escalating a diagonal ridge on failure.

    Returns the factor and the ridge actually added (0.0 when none was needed).
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    factor, info = lapack.dpotrf(a, lower=1, clean=1)
    if info == 0:
        return factor, 0.0
    scale = np.trace(a) / n
    if not np.isfinite(scale) or scale <= 0.0:
        scale = 1.0
    for mult in JITTER_LADDER:
        ridge = mult * scale
        factor, info = lapack.dpotrf(a + ridge * np.eye(n), lower=1, clean=1)
        if info == 0:
            return factor, ridge
    raise FactorizationError(
        f"matrix of size {n} is not positive definite even with ridge {ridge:.3g}"
    )


def spd_inverse(a: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive (semi)definite matrix via jittered Cholesky."""
    factor, _ = cholesky_jitter(symmetrize(a))
    inv_factor = solve_triangular(factor, np.eye(a.shape[0]), lower=True, check_finite=False)
    return inv_factor.T @ inv_factor


def gmrf_draw(factor: np.ndarray, b: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Draw from N(P^{-1} b, P^{-1}) given the lower Cholesky factor of P.

    Canonical-form sampling: with P = L L', the draw is
    L'^{-1} (L^{-1} b + z), which is the mean P^{-1} b plus L'^{-1} z.
    ``z`` may be a vector or a (n, n_draws) matrix of standard normals.
    """
    w = solve_triangular(factor, b, lower=True, check_finite=False)
    if z.ndim == 2 and w.ndim == 1:
        w = w[:, None]
    return solve_triangular(factor, w + z, lower=True, trans="T", check_finite=False)
