"""Sandwich-based pointwise intervals and sup-t simultaneous bands."""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import norm

from ._linalg import cholesky_jitter
from .design import LpDesign

# Draws per independently seeded block of the sup-t simulation.
SIM_BLOCK = 50_000
IRF_COLUMNS = ["treatment", "horizon", "estimate", "se", "ci_lo", "ci_hi",
               "band_lo", "band_hi", "level"]


def normal_quantile(level: float) -> float:
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    return float(norm.ppf(0.5 * (1.0 + level)))


def pointwise_intervals(theta, V, level: float = 0.90, coords=None):
    """theta_k -/+ z * sqrt(V_kk); returns (lo, hi, se)."""
    theta = np.asarray(theta, dtype=float)
    coords = np.arange(len(theta)) if coords is None else np.asarray(coords)
    var = np.diag(V)[coords]
    if np.any(var < 0):
        raise ValueError("negative variance on the diagonal of V")
    se = np.sqrt(var)
    z = normal_quantile(level)
    est = theta[coords]
    return est - z * se, est + z * se, se


def correlation_matrix(V: np.ndarray) -> np.ndarray:
    sd = np.sqrt(np.diag(V))
    corr = V / np.outer(sd, sd)
    np.fill_diagonal(corr, 1.0)
    return 0.5 * (corr + corr.T)


def _max_abs_block(factor, block, n_sim, seed_seq):
    size = min(SIM_BLOCK, n_sim - block * SIM_BLOCK)
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    xi = rng.standard_normal((size, factor.shape[0])) @ factor.T
    return np.abs(xi).max(axis=1)


def sup_t_critical_value(V, level: float = 0.90, n_sim: int = 100_000, seed: int = 0,
                         workers: int = 1) -> float:
    """Simulated level-quantile of max_h |xi_h|, xi ~ N(0, Corr(V)).

    Zero-variance coordinates are dropped with a warning. Draws come in fixed
    blocks with their own seeds, so the result does not depend on ``workers``.
    The value is floored at the pointwise normal quantile, which the maximum
    dominates in distribution.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    var = np.diag(V)
    if np.any(var < 0):
        raise ValueError("negative variance on the diagonal of V")
    keep = var > max(1e-14 * var.max(), 1e-300)
    if not keep.all():
        warnings.warn(f"{int((~keep).sum())} zero-variance coordinate(s) excluded from sup-t",
                      RuntimeWarning, stacklevel=2)
    if not keep.any():
        return normal_quantile(level)
    corr = correlation_matrix(V[np.ix_(keep, keep)])
    factor, _ = cholesky_jitter(corr)
    n_blocks = -(-n_sim // SIM_BLOCK)
    seeds = np.random.SeedSequence(seed).spawn(n_blocks)
    args = [(factor, k, n_sim, seeds[k]) for k in range(n_blocks)]
    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _max_abs_block(*a), args))
    else:
        parts = [_max_abs_block(*a) for a in args]
    stats = np.concatenate(parts)
    return max(float(np.quantile(stats, level)), normal_quantile(level))


def sup_t_band(theta, V, level: float = 0.90, n_sim: int = 100_000, seed: int = 0,
               workers: int = 1):
    """Simultaneous band theta -/+ c * se; returns (lo, hi, c)."""
    theta = np.asarray(theta, dtype=float)
    c = sup_t_critical_value(V, level, n_sim, seed, workers)
    se = np.sqrt(np.clip(np.diag(np.atleast_2d(V)), 0.0, None))
    return theta - c * se, theta + c * se, c


@dataclass
class IrfResult:
    """Impulse responses per treatment with pointwise and simultaneous intervals."""

    treatments: tuple[str, ...]
    horizons: np.ndarray
    estimate: np.ndarray
    se: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    band_lo: np.ndarray
    band_hi: np.ndarray
    level: float
    z_crit: float
    sup_t_crit: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for i, name in enumerate(self.treatments):
            for k, h in enumerate(self.horizons):
                rows.append((name, int(h), self.estimate[i, k], self.se[i, k],
                             self.ci_lo[i, k], self.ci_hi[i, k],
                             self.band_lo[i, k], self.band_hi[i, k], self.level))
        return pd.DataFrame(rows, columns=IRF_COLUMNS)

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False, lineterminator="\n")


def extract_irf(theta, V, design: LpDesign, treatments=None, level: float = 0.90,
                n_sim: int = 100_000, seed: int = 0, workers: int = 1) -> IrfResult:
    """Collect each treatment's response path with its own sup-t band."""
    names = design.treatment_names
    treatments = names if treatments is None else tuple(treatments)
    shape = (len(treatments), design.H + 1)
    out = {k: np.zeros(shape) for k in ("estimate", "se", "ci_lo", "ci_hi", "band_lo", "band_hi")}
    crit = np.zeros(len(treatments))
    for i, name in enumerate(treatments):
        if name not in names:
            raise KeyError(f"unknown treatment {name!r}")
        coords = design.path_coords(names.index(name))
        lo, hi, se = pointwise_intervals(theta, V, level, coords)
        blo, bhi, c = sup_t_band(np.asarray(theta)[coords], V[np.ix_(coords, coords)], level,
                                 n_sim, seed=_child_seed(seed, i), workers=workers)
        out["estimate"][i] = np.asarray(theta)[coords]
        out["se"][i], out["ci_lo"][i], out["ci_hi"][i] = se, lo, hi
        out["band_lo"][i], out["band_hi"][i] = blo, bhi
        crit[i] = c
    return IrfResult(treatments=treatments, horizons=np.asarray(design.horizons), level=level,
                     z_crit=normal_quantile(level), sup_t_crit=crit, **out)


def _child_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)[0])
