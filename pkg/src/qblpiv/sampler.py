"""Gibbs sampler for the LP-IV quasi-posterior.

Each sweep draws the stacked coefficients from their Gaussian conditional,
then the path scales tau_j^2 and the auxiliary nu_j from their inverse-gamma
conditionals (half-Cauchy scale-mixture representation).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import lapack

from ._linalg import cholesky_jitter, gmrf_draw
from .gmm import MomentModel
from .prior import PriorConfig, smoothing_precision

FLAT = "flat"
ROUGHNESS = "roughness"
_CHUNK = 1000


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for stream ``key`` under master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class McmcConfig:
    n_draws: int = 25_000
    n_burn: int = 5_000
    thin: int = 1
    seed: int = 0
    chain_id: int = 0
    prior: str = ROUGHNESS
    prior_config: PriorConfig = field(default_factory=PriorConfig)
    tau_init: float = 1.0
    nu_init: float = 1.0

    def __post_init__(self):
        prior = {"rp": ROUGHNESS}.get(self.prior.lower(), self.prior.lower())
        if prior not in (FLAT, ROUGHNESS):
            raise ValueError(f"unknown prior {self.prior!r}")
        object.__setattr__(self, "prior", prior)
        if not (self.n_draws > self.n_burn >= 0):
            raise ValueError("need n_draws > n_burn >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not (self.tau_init > 0 and self.nu_init > 0):
            raise ValueError("initial scales must be positive")

    @property
    def n_kept(self) -> int:
        return len(range(self.n_burn, self.n_draws, self.thin))


@dataclass
class Chain:
    theta: np.ndarray
    tau: np.ndarray | None
    config: McmcConfig
    max_jitter: float = 0.0

    def __len__(self) -> int:
        return self.theta.shape[0]


def draw_coefficients(upsilon: np.ndarray, pi: np.ndarray, theta_star: np.ndarray,
                      rng: np.random.Generator) -> np.ndarray:
    """One draw from N(Omega Upsilon theta*, Omega) with Omega = (Upsilon + Pi)^{-1}."""
    factor, _ = cholesky_jitter(upsilon + pi)
    z = rng.standard_normal(len(theta_star))
    return gmrf_draw(factor, upsilon @ theta_star, z)


def tau_shape(path_length: int) -> float:
    return 0.5 * (path_length + 1)


def update_tau(theta_path: np.ndarray, Q: np.ndarray, nu, rng: np.random.Generator):
    """Draw tau_j^2 ~ IG((n + 1)/2, 1/nu_j + theta_j' Q theta_j / 2), n = path length.

    ``theta_path`` is one path of length H + 1, or an (H + 1, J) array of paths
    with ``nu`` of length J.
    """
    theta_path = np.asarray(theta_path, dtype=float)
    quad = np.einsum("h...,hk,k...->...", theta_path, Q, theta_path)
    rate = 1.0 / np.asarray(nu, dtype=float) + 0.5 * quad
    return rate / rng.standard_gamma(tau_shape(theta_path.shape[0]), size=np.shape(rate))


def update_nu(tau2, kappa: float, rng: np.random.Generator):
    """Draw nu_j ~ IG(1, 1/kappa^2 + 1/tau_j^2)."""
    rate = 1.0 / kappa**2 + 1.0 / np.asarray(tau2, dtype=float)
    return rate / rng.standard_exponential(size=np.shape(rate))


def _theta_draw(upsilon, q_kron, tau2, H, b, z):
    precision = upsilon + q_kron * np.tile(1.0 / tau2, H + 1)
    factor, info = lapack.dpotrf(precision, lower=1)
    ridge = 0.0
    if info != 0:
        factor, ridge = cholesky_jitter(precision)
    w, _ = lapack.dtrtrs(factor, b, lower=1)
    theta, _ = lapack.dtrtrs(factor, w + z, lower=1, trans=1)
    return theta, ridge


def run_gibbs(model: MomentModel, config: McmcConfig = McmcConfig()) -> Chain:
    """Simulate the quasi-posterior; the sweep order is theta, tau, nu.

    Coordinates the model marks as fixed (exactly fitted horizons) stay at
    theta*; the Gaussian step then draws the free block from its conditional.
    """
    design = model.design
    K, J, H = design.K, design.J, design.H
    free = model.free
    partial = not free.all()
    upsilon = model.upsilon
    if partial:
        upsilon = upsilon[np.ix_(free, free)]
        fixed_part = model.theta_star[~free]
    b = upsilon @ model.theta_star[free]
    n_free = int(free.sum())
    normals = make_rng(config.seed, config.chain_id, 0)
    kept = np.zeros((config.n_kept, K))
    kept[:, ~free] = model.theta_star[~free]

    if config.prior == FLAT:
        factor, jitter = cholesky_jitter(upsilon) if n_free else (None, 0.0)
        row = 0
        for start in range(0, config.n_draws, _CHUNK):
            stop = min(start + _CHUNK, config.n_draws)
            z = normals.standard_normal((stop - start, K))
            it = np.arange(start, stop)
            keep = (it >= config.n_burn) & ((it - config.n_burn) % config.thin == 0)
            if keep.any() and n_free:
                draws = gmrf_draw(factor, b, z[keep][:, free].T).T
                kept[row:row + len(draws), free] = draws
            row += int(keep.sum())
        return Chain(theta=kept, tau=None, config=config, max_jitter=jitter)

    gammas = make_rng(config.seed, config.chain_id, 1)
    pc = config.prior_config
    Q = smoothing_precision(H, pc.rho)
    q_kron = np.kron(Q, np.eye(J))
    if partial:
        q_cross = q_kron[np.ix_(free, ~free)]
        q_kron = q_kron[np.ix_(free, free)]
        tiles = np.tile(np.arange(J), H + 1)
    shape = tau_shape(H + 1)
    inv_kappa2 = 1.0 / pc.kappa**2
    tau2 = np.full(J, config.tau_init**2)
    nu = np.full(J, config.nu_init)
    tau_kept = np.zeros((config.n_kept, J))
    theta = model.theta_star.copy()
    max_jitter = 0.0
    row = 0

    for start in range(0, config.n_draws, _CHUNK):
        n = min(_CHUNK, config.n_draws - start)
        z = normals.standard_normal((n, K))
        g_tau = gammas.standard_gamma(shape, size=(n, J))
        e_nu = gammas.standard_exponential(size=(n, J))
        for i in range(n):
            if not partial:
                theta, jitter = _theta_draw(upsilon, q_kron, tau2, H, b, z[i])
                max_jitter = max(max_jitter, jitter)
            elif n_free:
                # Prior precision scales each column j by 1/tau_j^2.
                inv = 1.0 / tau2[tiles]
                prec = upsilon + q_kron * inv[free][None, :]
                rhs = b - (q_cross * inv[~free][None, :]) @ fixed_part
                factor, info = lapack.dpotrf(prec, lower=1)
                if info != 0:
                    factor, ridge = cholesky_jitter(prec)
                    max_jitter = max(max_jitter, ridge)
                w, _ = lapack.dtrtrs(factor, rhs, lower=1)
                theta[free], _ = lapack.dtrtrs(factor, w + z[i][free], lower=1, trans=1)

            paths = theta.reshape(H + 1, J)
            quad = np.sum((Q @ paths) * paths, axis=0)
            tau2 = (1.0 / nu + 0.5 * quad) / g_tau[i]
            nu = (inv_kappa2 + 1.0 / tau2) / e_nu[i]

            it = start + i
            if it >= config.n_burn and (it - config.n_burn) % config.thin == 0:
                kept[row] = theta
                tau_kept[row] = np.sqrt(tau2)
                row += 1
    return Chain(theta=kept, tau=tau_kept, config=config, max_jitter=max_jitter)


def posterior_mean(chain: Chain) -> np.ndarray:
    if len(chain) == 0:
        raise ValueError("chain has no retained draws")
    return chain.theta.mean(axis=0)


def batch_means_se(draws: np.ndarray, n_batches: int = 50) -> np.ndarray:
    """Monte Carlo standard error of the column means by non-overlapping batch means."""
    draws = np.asarray(draws, dtype=float)
    size = draws.shape[0] // n_batches
    if size < 1:
        raise ValueError("not enough draws for the requested number of batches")
    means = draws[: size * n_batches].reshape(n_batches, size, -1).mean(axis=1)
    return means.std(axis=0, ddof=1) / np.sqrt(n_batches)


def write_chain_csv(chain: Chain, directory) -> list[Path]:
    """Dump draws in long format: theta_draws.csv and, if present, tau_draws.csv."""
    directory = Path(directory)
    written = []
    iters = chain.config.n_burn + chain.config.thin * np.arange(len(chain))
    targets = [("theta_draws.csv", "coordinate", chain.theta)]
    if chain.tau is not None:
        targets.append(("tau_draws.csv", "path", chain.tau))
    for name, label, arr in targets:
        path = directory / name
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", label, "value"])
            for it, row in zip(iters, arr):
                writer.writerows((int(it), k, repr(float(v))) for k, v in enumerate(row))
        written.append(path)
    return written
