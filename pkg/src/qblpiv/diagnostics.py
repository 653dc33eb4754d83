"""Instrument diagnostics: first-stage relevance and placebo regressions."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from scipy.stats import chi2

from .dataset import Dataset
from .design import LEVEL, LpDesign, SpecConfig, build_design
from .estimation import fit_quasi_bayes
from .gmm import PLAIN
from .inference import IrfResult
from .sampler import McmcConfig


class CollinearityError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class RelevanceStats:
    coef: np.ndarray
    partial_r2: float
    wald: float
    p_value: float


def _zscore(a: np.ndarray) -> np.ndarray:
    sd = a.std(axis=0, ddof=1)
    sd = np.where(sd > 0, sd, 1.0)
    return (a - a.mean(axis=0)) / sd


def _ols(y, X):
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise CollinearityError("regressors are collinear")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef, y - X @ coef


def partial_regression(dep, excluded, exog) -> RelevanceStats:
    """Regress ``dep`` on [excluded, exog] and test the excluded block.

    The Wald statistic uses an HC1 covariance and is referred to a chi-square
    with one degree of freedom per excluded regressor.
    """
    dep = np.asarray(dep, dtype=float)
    excluded = np.atleast_2d(np.asarray(excluded, dtype=float).T).T
    exog = np.asarray(exog, dtype=float).reshape(len(dep), -1)
    full = np.hstack([excluded, exog])
    q = excluded.shape[1]
    coef, resid = _ols(dep, full)
    rss_full = float(resid @ resid)
    if exog.shape[1]:
        _, resid_r = _ols(dep, exog)
    else:
        resid_r = dep
    rss_r = float(resid_r @ resid_r)
    partial = 0.0 if rss_r == 0 else max(0.0, min(1.0, (rss_r - rss_full) / rss_r))

    n, k = full.shape
    xtx_inv = np.linalg.inv(full.T @ full)
    meat = (full * resid[:, None] ** 2).T @ full
    cov = xtx_inv @ meat @ xtx_inv * n / (n - k)
    b = coef[:q]
    v = cov[:q, :q]
    scale = max(float(np.abs(b).max()), 1e-300) ** 2
    if np.linalg.cond(v) > 1e14 or np.all(np.abs(v) <= 1e-28 * scale):
        wald = np.inf
    else:
        wald = float(b @ np.linalg.solve(v, b))
    p_value = 0.0 if np.isinf(wald) else float(chi2.sf(wald, q))
    return RelevanceStats(coef=b, partial_r2=partial, wald=wald, p_value=p_value)


@dataclass
class FirstStageReport:
    treatments: tuple[str, ...]
    instruments: tuple[str, ...]
    stats: list
    smallest_singular_value: float

    @property
    def coefficient_matrix(self) -> np.ndarray:
        """Rows are treatments, columns are instruments."""
        return np.vstack([s.coef for s in self.stats])

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for name, s in zip(self.treatments, self.stats):
            row = {"treatment": name}
            row.update({f"coef_{inst}": c for inst, c in zip(self.instruments, s.coef)})
            row.update(partial_r2=s.partial_r2, wald=s.wald, p_value=s.p_value,
                       min_singular_value=self.smallest_singular_value)
            rows.append(row)
        return pd.DataFrame(rows)


def _blocks(design: LpDesign):
    nt = design.n_treatments
    return _zscore(design.X[:, :nt]), _zscore(design.Z[:, :nt]), design.exogenous()


def first_stage(dataset: Dataset, config: SpecConfig) -> FirstStageReport:
    """Regress each treatment on all instruments and the baseline controls.

    Treatments and instruments are standardized on the estimation sample so the
    singular value of the coefficient matrix is scale-free.
    """
    design = build_design(dataset, config)
    treat, inst, exog = _blocks(design)
    stats = [partial_regression(treat[:, i], inst, exog) for i in range(treat.shape[1])]
    coef = np.vstack([s.coef for s in stats])
    sv = float(np.linalg.svd(coef, compute_uv=False).min())
    names = design.treatment_names
    inst_names = tuple(dataset.instrument_names[dataset.treatment_names.index(n)] for n in names)
    return FirstStageReport(treatments=names, instruments=inst_names, stats=stats,
                            smallest_singular_value=sv)


def placebo_predetermined(dataset: Dataset, lags, config: SpecConfig,
                          variables=None) -> pd.DataFrame:
    """Regress lagged variables on the instruments and baseline controls.

    ``variables`` defaults to the outcome and the treatments; any series name
    in the dataset is accepted.
    """
    design = build_design(dataset, config)
    _, inst, exog = _blocks(design)
    if variables is None:
        variables = (dataset.outcome_name, *design.treatment_names)
    inst_names = [dataset.instrument_names[dataset.treatment_names.index(n)]
                  for n in design.treatment_names]
    rows = []
    for var in variables:
        series = dataset.column(var)
        for lag in lags:
            idx = design.origins - lag
            if lag < 0 or idx.min() < 0:
                raise ValueError(f"lag {lag} of {var!r} is not available after trimming")
            s = partial_regression(series[idx], inst, exog)
            row = {"variable": var, "lag": int(lag)}
            row.update({f"coef_{n}": c for n, c in zip(inst_names, s.coef)})
            row.update(partial_r2=s.partial_r2, wald=s.wald, p_value=s.p_value)
            rows.append(row)
    return pd.DataFrame(rows)


def lead_placebo(dataset: Dataset, config: SpecConfig, leads=range(1, 9),
                 mcmc: McmcConfig = McmcConfig(), cov_mode: str = PLAIN, level: float = 0.90,
                 n_sim: int = 100_000, workers: int = 1,
                 outcome_lags: bool = False) -> IrfResult:
    """Estimate responses of pre-treatment outcomes y_{t-k} in the level specification.

    By default the outcome's own lags are left out of the regressors: with
    them, every lead k <= lags is a regressor itself and its response is
    identically zero. ``outcome_lags=True`` keeps them; those leads then come
    back as exact zeros with zero variance. The sample always starts where the
    baseline level design with ``config.lags`` lags would, or later if a lead
    needs more history.

    The returned result is indexed by horizon -k, ordered from the earliest lead.
    """
    leads = sorted(int(k) for k in leads)
    if not leads or leads[0] < 1:
        raise ValueError("leads must be positive integers")
    cfg = replace(config, kind=LEVEL, lags=config.lags if outcome_lags else 0)
    base = build_design(dataset, cfg, first_origin=max(leads[-1], config.lags))
    order = leads[::-1]
    Y = np.column_stack([dataset.outcome[base.origins - k] for k in order])
    design = replace(base, Y=Y, horizons=-np.asarray(order))
    return fit_quasi_bayes(design, mcmc, cov_mode, level, n_sim, workers).irf
