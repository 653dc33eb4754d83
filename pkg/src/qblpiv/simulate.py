"""Monte Carlo study of LP-IV estimators on an endogenous-treatment DGP.

The data-generating process is

    z_t ~ N(0, 1),  u_t ~ N(0, s_u^2)
    r_t = pi_z z_t + kappa_u u_t + v_t
    y_t = phi y_{t-1} + beta r_t + u_t + e_t

so the confounder u_t enters both treatment and outcome, z_t is a valid
instrument, and the response of y_{t+h} to a unit r_t shock is beta * phi^h.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
import pandas as pd

from .dataset import Dataset
from .design import LD, LpDesign, SpecConfig, build_design
from .estimation import fit_gmm, fit_quasi_bayes
from .gmm import PLAIN
from .inference import IrfResult
from .prior import PriorConfig
from .sampler import FLAT, ROUGHNESS, McmcConfig, make_rng

log = logging.getLogger(__name__)

ESTIMATORS = ("gmm", "qb_flat", "qb_rp")


@dataclass(frozen=True)
class DgpParams:
    phi: float = 0.7
    beta: float = 1.0
    pi_z: float = 1.0
    kappa_u: float = 0.5
    sigma_u: float = 1.0
    sigma_v: float = 1.0
    sigma_e: float = 1.0
    T: int = 200
    H: int = 7
    burn_in: int = 200

    def __post_init__(self):
        if not abs(self.phi) < 1:
            raise ValueError("phi must satisfy |phi| < 1")
        if self.pi_z == 0:
            raise ValueError("pi_z must be non-zero")
        if min(self.sigma_v, self.sigma_e) <= 0 or self.sigma_u < 0:
            raise ValueError("noise standard deviations must be positive")


def true_irf(params: DgpParams, H: int | None = None) -> np.ndarray:
    H = params.H if H is None else H
    return params.beta * params.phi ** np.arange(H + 1)


def generate_dgp(params: DgpParams, rng: np.random.Generator, n_obs: int | None = None):
    """Simulate ``n_obs`` observations (default ``params.T``); returns (Dataset, true IRF)."""
    n = params.T if n_obs is None else n_obs
    total = n + params.burn_in
    z = rng.standard_normal(total)
    u = params.sigma_u * rng.standard_normal(total)
    v = params.sigma_v * rng.standard_normal(total)
    e = params.sigma_e * rng.standard_normal(total)
    r = params.pi_z * z + params.kappa_u * u + v
    shock = params.beta * r + u + e
    y = np.empty(total)
    prev = 0.0
    for t in range(total):
        prev = params.phi * prev + shock[t]
        y[t] = prev
    keep = slice(params.burn_in, None)
    ds = Dataset.from_arrays(y[keep], r[keep], z[keep])
    return ds, true_irf(params)


@dataclass(frozen=True)
class McGrid:
    T_values: tuple[int, ...] = (200, 500, 1000)
    estimators: tuple = ESTIMATORS
    replications: int = 200
    params: DgpParams = field(default_factory=DgpParams)
    seed: int = 0
    horizon: int = 7
    lags: int = 7
    kind: str = LD
    cov_mode: str = PLAIN
    n_draws: int = 25_000
    n_burn: int = 5_000
    rho: float = 4.0
    kappa: float = 1.0
    level: float = 0.90
    n_sim: int = 100_000

    def manifest(self) -> dict:
        d = asdict(self)
        d["estimators"] = [e if isinstance(e, str) else getattr(e, "__name__", repr(e))
                           for e in self.estimators]
        return d


@dataclass
class McReport:
    pointwise: pd.DataFrame
    simultaneous: pd.DataFrame
    grid: McGrid
    failures: dict

    def write(self, directory) -> None:
        from pathlib import Path
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        opts = dict(index=False, lineterminator="\n")
        self.pointwise.to_csv(directory / "mc_pointwise.csv", **opts)
        self.simultaneous.to_csv(directory / "mc_simultaneous.csv", **opts)


def _mcmc(grid: McGrid, prior: str, seed: int) -> McmcConfig:
    return McmcConfig(n_draws=grid.n_draws, n_burn=grid.n_burn, seed=seed, prior=prior,
                      prior_config=PriorConfig(grid.rho, grid.kappa))


def gmm_estimator(design: LpDesign, seed: int, grid: McGrid) -> IrfResult:
    return fit_gmm(design, grid.cov_mode, grid.level, grid.n_sim, seed).irf


def qb_flat_estimator(design: LpDesign, seed: int, grid: McGrid) -> IrfResult:
    return fit_quasi_bayes(design, _mcmc(grid, FLAT, seed), grid.cov_mode, grid.level,
                           grid.n_sim).irf


def qb_rp_estimator(design: LpDesign, seed: int, grid: McGrid) -> IrfResult:
    return fit_quasi_bayes(design, _mcmc(grid, ROUGHNESS, seed), grid.cov_mode, grid.level,
                           grid.n_sim).irf


_REGISTRY: dict[str, Callable] = {
    "gmm": gmm_estimator,
    "qb_flat": qb_flat_estimator,
    "qb_rp": qb_rp_estimator,
}


def _resolve(est) -> tuple[str, Callable]:
    if isinstance(est, str):
        if est not in _REGISTRY:
            raise ValueError(f"unknown estimator {est!r}; choose from {sorted(_REGISTRY)}")
        return est, _REGISTRY[est]
    return getattr(est, "__name__", repr(est)), est


def _seed(master: int, *key: int) -> int:
    ss = np.random.SeedSequence(master, spawn_key=key)
    return int(ss.generate_state(1, np.uint64)[0])


def _replication(task):
    grid, T, rep = task
    params = DgpParams(**{**asdict(grid.params), "T": T, "H": grid.horizon})
    rng = make_rng(grid.seed, T, rep, 0)
    extra = grid.lags + grid.horizon + (1 if grid.kind == LD else 0)
    dataset, _ = generate_dgp(params, rng, n_obs=T + extra)
    design = build_design(dataset, SpecConfig(kind=grid.kind, horizon=grid.horizon,
                                              lags=grid.lags))
    out = {}
    for k, est in enumerate(grid.estimators):
        name, fn = _resolve(est)
        try:
            irf = fn(design, _seed(grid.seed, T, rep, k + 1), grid)
            out[name] = np.vstack([irf.estimate[0], irf.ci_lo[0], irf.ci_hi[0],
                                   irf.band_lo[0], irf.band_hi[0]])
        except (np.linalg.LinAlgError, ValueError) as exc:
            out[name] = repr(exc)
    return out


def summarize(records: np.ndarray, truth: np.ndarray) -> dict:
    """Metrics over replications.

    ``records`` has shape (n_rep, 5, H + 1) holding estimate, pointwise lo/hi
    and band lo/hi for each replication.
    """
    est, lo, hi, blo, bhi = (records[:, i] for i in range(5))
    err = est - truth
    inside = (lo <= truth) & (truth <= hi)
    band_inside = np.all((blo <= truth) & (truth <= bhi), axis=1)
    return {
        "bias": err.mean(axis=0),
        "rmse": np.sqrt((err**2).mean(axis=0)),
        "length": (hi - lo).mean(axis=0),
        "coverage": inside.mean(axis=0),
        "simultaneous": float(band_inside.mean()),
    }


def run_monte_carlo(grid: McGrid, workers: int = 1) -> McReport:
    """Replicate every (T, replication) cell and aggregate in a fixed order."""
    tasks = [(grid, T, rep) for T in grid.T_values for rep in range(grid.replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replication, tasks, chunksize=1))
    else:
        results = [_replication(t) for t in tasks]

    names = [_resolve(e)[0] for e in grid.estimators]
    truth = true_irf(grid.params, grid.horizon)
    point_rows, simul_rows, failures = [], [], {}
    for T in grid.T_values:
        cell = [res for (g, t, r), res in zip(tasks, results) if t == T]
        for name in names:
            ok = [res[name] for res in cell if not isinstance(res[name], str)]
            failed = [res[name] for res in cell if isinstance(res[name], str)]
            if failed:
                failures[(name, T)] = failed
                log.warning("%s at T=%d: %d replication(s) failed", name, T, len(failed))
            if not ok:
                continue
            m = summarize(np.stack(ok), truth)
            for h in range(grid.horizon + 1):
                point_rows.append((name, T, h, m["bias"][h], m["rmse"][h], m["length"][h],
                                   m["coverage"][h]))
            simul_rows.append((name, T, m["simultaneous"], len(ok), len(failed)))
    pointwise = pd.DataFrame(point_rows, columns=["estimator", "T", "h", "bias", "rmse",
                                                  "length", "coverage"])
    simultaneous = pd.DataFrame(simul_rows, columns=["estimator", "T", "coverage",
                                                     "n_ok", "n_failed"])
    return McReport(pointwise=pointwise, simultaneous=simultaneous, grid=grid,
                    failures=failures)


def manifest_text(grid: McGrid, **extra) -> str:
    return json.dumps({**grid.manifest(), **extra}, indent=2, sort_keys=True) + "\n"
