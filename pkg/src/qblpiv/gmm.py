"""Stacked IV moment machinery for the just-identified LP-IV system."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from ._linalg import spd_inverse, symmetrize
from .design import LpDesign

PLAIN = "plain"
BLOCK = "block"
HAR = "har"
COV_MODES = (PLAIN, BLOCK, HAR)

# Z'X with a larger 2-norm condition number is treated as singular.
MAX_CONDITION = 1e12


class IdentificationError(np.linalg.LinAlgError):
    """Z'X is singular or too ill-conditioned to invert reliably."""


def har_bandwidth(T: int) -> int:
    """Bartlett truncation lag ceil(1.3 * sqrt(T))."""
    return math.ceil(1.3 * math.sqrt(T) - 1e-12)


def _check_mode(mode: str) -> str:
    mode = mode.lower()
    if mode not in COV_MODES:
        raise ValueError(f"unknown covariance mode {mode!r}; use one of {COV_MODES}")
    return mode


def _cross(design: LpDesign) -> np.ndarray:
    zx = design.Z.T @ design.X
    cond = np.linalg.cond(zx)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IdentificationError(f"Z'X is ill-conditioned (condition number {cond:.3g})")
    return zx


def initial_iv_estimate(design: LpDesign) -> np.ndarray:
    """theta* = vec((Z'X)^{-1} Z'Y), stacked horizon-major."""
    coef = np.linalg.solve(_cross(design), design.Z.T @ design.Y)
    return coef.T.reshape(-1)


def jacobian(design: LpDesign) -> np.ndarray:
    """G_hat = I_{H+1} kron (-Z'X / T)."""
    return np.kron(np.eye(design.H + 1), -(design.Z.T @ design.X) / design.T)


def residuals(design: LpDesign, theta: np.ndarray) -> np.ndarray:
    coef = np.asarray(theta, dtype=float).reshape(design.H + 1, design.J)
    return design.Y - design.X @ coef.T


def exact_horizons(design: LpDesign, theta: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Horizons whose residuals are pure round-off, as a boolean array of length H + 1.

    This happens when a dependent variable is itself spanned by the regressors,
    e.g. a lead y_{t-k} with k among the outcome lags.
    """
    coef = np.asarray(theta, dtype=float).reshape(design.H + 1, design.J)
    fitted = design.X @ coef.T
    scale = np.maximum(np.abs(design.Y).max(axis=0), np.abs(fitted).max(axis=0))
    return np.abs(design.Y - fitted).max(axis=0) <= rtol * scale


def moment_matrix(design: LpDesign, theta: np.ndarray) -> np.ndarray:
    """Per-origin stacked moments; row t, block h is e_(h),t * z_t."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (design.K,):
        raise ValueError(f"theta must have length {design.K}")
    e = residuals(design, theta)
    return (e[:, :, None] * design.Z[:, None, :]).reshape(design.T, design.K)


def mean_moment(design: LpDesign, theta: np.ndarray) -> np.ndarray:
    return moment_matrix(design, theta).mean(axis=0)


def block_diagonal_part(a: np.ndarray, block: int) -> np.ndarray:
    """Zero every off-diagonal ``block`` x ``block`` block of ``a``."""
    n = a.shape[0] // block
    mask = np.kron(np.eye(n), np.ones((block, block)))
    return a * mask


def long_run_covariance(m: np.ndarray, bandwidth: int) -> np.ndarray:
    """Uncentered Bartlett-kernel covariance of the rows of ``m``."""
    T = m.shape[0]
    sigma = m.T @ m / T
    for b in range(1, bandwidth):
        gamma = m[b:].T @ m[:-b] / T
        sigma += (1.0 - b / bandwidth) * (gamma + gamma.T)
    return symmetrize(sigma)


def moment_covariance(design: LpDesign, theta: np.ndarray, mode: str = PLAIN,
                      bandwidth: int | None = None) -> np.ndarray:
    """Sigma_hat of the stacked moments at ``theta``.

    ``plain`` is (1/T) sum m_t m_t'; ``block`` keeps only within-horizon
    blocks; ``har`` adds Bartlett-weighted autocovariances up to lag B - 1.
    """
    mode = _check_mode(mode)
    m = moment_matrix(design, theta)
    if mode == HAR:
        B = har_bandwidth(design.T) if bandwidth is None else int(bandwidth)
        return long_run_covariance(m, B)
    sigma = symmetrize(m.T @ m / design.T)
    if mode == BLOCK:
        sigma = block_diagonal_part(sigma, design.J)
    return sigma


def weighting_matrix(sigma: np.ndarray, mode: str = PLAIN, block: int | None = None) -> np.ndarray:
    """Inverse moment covariance; block-by-block in ``block`` mode."""
    mode = _check_mode(mode)
    sigma = symmetrize(np.asarray(sigma, dtype=float))
    if mode == BLOCK:
        if block is None:
            raise ValueError("block mode needs the block size")
        n = sigma.shape[0] // block
        blocks = [spd_inverse(sigma[i * block:(i + 1) * block, i * block:(i + 1) * block])
                  for i in range(n)]
        return block_diag(*blocks)
    return symmetrize(spd_inverse(sigma))


def horizon_mask(exact: np.ndarray, J: int) -> np.ndarray:
    """Expand a per-horizon flag to the stacked coordinates."""
    return np.repeat(np.asarray(exact, dtype=bool), J)


def restricted_weighting(sigma: np.ndarray, free: np.ndarray, mode: str = PLAIN,
                         block: int | None = None) -> np.ndarray:
    """Inverse of Sigma on the ``free`` coordinates, zero elsewhere."""
    W = np.zeros_like(sigma)
    if free.any():
        W[np.ix_(free, free)] = weighting_matrix(sigma[np.ix_(free, free)], mode, block)
    return W


def gmm_estimate(design: LpDesign, W: np.ndarray, free: np.ndarray | None = None,
                 fixed_values: np.ndarray | None = None) -> np.ndarray:
    """Minimizer of m_bar(theta)' W m_bar(theta).

    m_bar is affine, m_bar(theta) = g + G theta, so the minimizer solves the
    normal equations G'WG theta = -G'W g. Coordinates outside ``free`` are held
    at ``fixed_values``; G is block diagonal by horizon so they do not enter
    the free equations.
    """
    G = jacobian(design)
    g = (design.Z.T @ design.Y / design.T).T.reshape(-1)
    if free is None:
        GW = G.T @ W
        return np.linalg.solve(GW @ G, -GW @ g)
    theta = np.array(fixed_values, dtype=float)
    if free.any():
        Gf, Wf = G[np.ix_(free, free)], W[np.ix_(free, free)]
        GW = Gf.T @ Wf
        theta[free] = np.linalg.solve(GW @ Gf, -GW @ g[free])
    return theta


def two_step_gmm(design: LpDesign, mode: str = PLAIN,
                 bandwidth: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """System two-step GMM: identity weight first, then the inverse moment covariance.

    Horizons fitted exactly in the first step keep their first-step values
    and get zero weight in the second.
    """
    _cross(design)
    theta1 = gmm_estimate(design, np.eye(design.K))
    sigma = moment_covariance(design, theta1, mode, bandwidth)
    free = ~horizon_mask(exact_horizons(design, theta1), design.J)
    W2 = restricted_weighting(sigma, free, mode, design.J)
    if free.all():
        return gmm_estimate(design, W2), W2
    return gmm_estimate(design, W2, free, theta1), W2


def two_sls(design: LpDesign) -> np.ndarray:
    """Horizon-by-horizon 2SLS, stacked horizon-major."""
    Z, X = design.Z, design.X
    proj = Z @ np.linalg.solve(Z.T @ Z, Z.T @ X)
    coef = np.linalg.solve(proj.T @ X, proj.T @ design.Y)
    return coef.T.reshape(-1)


def sandwich_covariance(G: np.ndarray, W: np.ndarray, sigma: np.ndarray, T: int,
                        free: np.ndarray | None = None) -> np.ndarray:
    """V_hat = (1/T) (G'WG)^{-1} G'W Sigma W G (G'WG)^{-1}.

    With ``free`` given, the formula is applied to those coordinates and the
    rest get zero variance.
    """
    if free is not None and not free.all():
        V = np.zeros_like(sigma)
        if free.any():
            idx = np.ix_(free, free)
            V[idx] = sandwich_covariance(G[idx], W[idx], sigma[idx], T)
        return V
    GW = G.T @ W
    bread = np.linalg.inv(symmetrize(GW @ G))
    meat = GW @ sigma @ GW.T
    return symmetrize(bread @ meat @ bread) / T


@dataclass(frozen=True)
class MomentModel:
    """Everything the sampler and inference need from the moment conditions."""

    design: LpDesign
    theta_star: np.ndarray
    G: np.ndarray
    sigma: np.ndarray
    W: np.ndarray
    cov_mode: str = PLAIN
    bandwidth: int | None = None
    # Coordinates of exactly fitted horizons: the quasi-posterior is a point
    # mass at theta* there and W, Upsilon vanish on them.
    fixed: np.ndarray | None = None

    def __post_init__(self):
        if self.fixed is None:
            object.__setattr__(self, "fixed", np.zeros(self.design.K, dtype=bool))

    @property
    def free(self) -> np.ndarray:
        return ~self.fixed

    @property
    def upsilon(self) -> np.ndarray:
        """Quasi-likelihood curvature T G'WG."""
        return symmetrize(self.design.T * self.G.T @ self.W @ self.G)

    @property
    def inference_mode(self) -> str:
        # Inference always uses the full stacked covariance.
        return HAR if self.cov_mode == HAR else PLAIN

    def sandwich(self, theta: np.ndarray) -> np.ndarray:
        """Sandwich covariance with Sigma_hat evaluated at ``theta``."""
        sigma = moment_covariance(self.design, theta, self.inference_mode, self.bandwidth)
        return sandwich_covariance(self.G, self.W, sigma, self.design.T, self.free)


def build_moment_model(design: LpDesign, cov_mode: str = PLAIN,
                       bandwidth: int | None = None) -> MomentModel:
    """Evaluate theta*, G_hat and W (fixed at theta*) for ``design``."""
    cov_mode = _check_mode(cov_mode)
    if cov_mode == HAR and bandwidth is None:
        bandwidth = har_bandwidth(design.T)
    theta_star = initial_iv_estimate(design)
    sigma = moment_covariance(design, theta_star, cov_mode, bandwidth)
    fixed = horizon_mask(exact_horizons(design, theta_star), design.J)
    W = restricted_weighting(sigma, ~fixed, cov_mode, design.J)
    return MomentModel(design=design, theta_star=theta_star, G=jacobian(design), sigma=sigma,
                       W=W, cov_mode=cov_mode, bandwidth=bandwidth, fixed=fixed)
