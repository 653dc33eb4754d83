"""End-to-end estimators: quasi-Bayesian LP-IV and the two-step GMM benchmark."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import LpDesign
from .gmm import PLAIN, MomentModel, build_moment_model, moment_covariance, sandwich_covariance, \
    two_step_gmm
from .inference import IrfResult, extract_irf
from .sampler import Chain, McmcConfig, posterior_mean, run_gibbs


@dataclass
class Estimate:
    theta: np.ndarray
    V: np.ndarray
    design: LpDesign
    model: MomentModel | None = None
    chain: Chain | None = None
    irf: IrfResult | None = None


def band_seed(seed: int, chain_id: int = 0) -> int:
    """Seed for the sup-t simulation, disjoint from the MCMC streams."""
    ss = np.random.SeedSequence(seed, spawn_key=(chain_id, 2))
    return int(ss.generate_state(1, np.uint64)[0])


def fit_quasi_bayes(design: LpDesign, mcmc: McmcConfig = McmcConfig(), cov_mode: str = PLAIN,
                    level: float = 0.90, n_sim: int = 100_000, workers: int = 1,
                    bands: bool = True) -> Estimate:
    """Quasi-posterior mean with sandwich covariance evaluated at that mean."""
    model = build_moment_model(design, cov_mode)
    chain = run_gibbs(model, mcmc)
    theta = posterior_mean(chain)
    V = model.sandwich(theta)
    irf = None
    if bands:
        irf = extract_irf(theta, V, design, level=level, n_sim=n_sim,
                          seed=band_seed(mcmc.seed, mcmc.chain_id), workers=workers)
    return Estimate(theta=theta, V=V, design=design, model=model, chain=chain, irf=irf)


def fit_gmm(design: LpDesign, cov_mode: str = PLAIN, level: float = 0.90,
            n_sim: int = 100_000, seed: int = 0, workers: int = 1,
            bands: bool = True) -> Estimate:
    """Two-step GMM with sandwich covariance under the second-step weight."""
    theta, W2 = two_step_gmm(design, cov_mode)
    model = build_moment_model(design, cov_mode)
    sigma = moment_covariance(design, theta, model.inference_mode, model.bandwidth)
    V = sandwich_covariance(model.G, W2, sigma, design.T, model.free)
    irf = None
    if bands:
        irf = extract_irf(theta, V, design, level=level, n_sim=n_sim,
                          seed=band_seed(seed), workers=workers)
    return Estimate(theta=theta, V=V, design=design, model=model, irf=irf)
