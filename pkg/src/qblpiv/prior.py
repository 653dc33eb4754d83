"""Proper roughness-penalty prior over horizon-indexed coefficient paths."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PriorConfig:
    rho: float = 4.0
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("rho", "kappa"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value}")


def difference_matrix(H: int) -> np.ndarray:
    """First-difference operator of shape (H, H + 1)."""
    if H < 1:
        raise ValueError("difference matrix needs H >= 1")
    D = np.zeros((H, H + 1))
    idx = np.arange(H)
    D[idx, idx] = -1.0
    D[idx, idx + 1] = 1.0
    return D


def smoothing_precision(H: int, rho: float) -> np.ndarray:
    """Q = D'D + (8 / rho^2) I over horizons 0..H.

    With H = 0 there are no differences and Q is the 1x1 ridge.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    ridge = 8.0 / rho**2
    if H == 0:
        return np.array([[ridge]])
    D = difference_matrix(H)
    return D.T @ D + ridge * np.eye(H + 1)


def prior_correlation(distance, rho: float):
    """Interior-point approximation exp(-sqrt(8) |distance| / rho)."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    return np.exp(-np.sqrt(8.0) * np.abs(distance) / rho)


def stacked_prior_precision(Q: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Pi = Q kron diag(tau^-2) for horizon-major stacking."""
    tau = np.asarray(tau, dtype=float).reshape(-1)
    if np.any(~(tau > 0)):
        raise ValueError("tau must be strictly positive")
    return np.kron(Q, np.diag(tau**-2.0))


def roughness(theta: np.ndarray, J: int) -> float:
    """Sum over paths of squared adjacent differences, sum_j theta_j' D'D theta_j."""
    paths = np.asarray(theta, dtype=float).reshape(-1, J)
    return float(np.sum(np.diff(paths, axis=0) ** 2))
