"""Horizon-stacked LP-IV regression system.

Columns of X are ordered (treatments, intercept, outcome lags, Fourier sines,
Fourier cosines, controls, indicators); Z equals X with instruments in the
treatment slots. Coefficients are stacked horizon-major, so covariate ``j`` at
horizon ``h`` sits at position ``h * J + j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import DOW_NAMES, Dataset, day_of_week_indicators, fourier_features

LEVEL = "level"
LD = "ld"


class DesignError(ValueError):
    pass


@dataclass(frozen=True)
class SpecConfig:
    kind: str = LD
    horizon: int = 7
    lags: int = 7
    n_fourier: int = 0
    day_of_week: bool = False
    treatments: tuple[str, ...] | None = None
    controls: tuple[str, ...] | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in (LEVEL, LD):
            raise DesignError(f"unknown specification {self.kind!r}; use 'level' or 'ld'")
        object.__setattr__(self, "kind", kind)
        if self.horizon < 0 or self.lags < 0 or self.n_fourier < 0:
            raise DesignError("horizon, lags and n_fourier must be non-negative")


@dataclass(frozen=True)
class LpDesign:
    X: np.ndarray
    Z: np.ndarray
    Y: np.ndarray
    origins: np.ndarray
    columns: tuple[str, ...]
    n_treatments: int
    kind: str = LD
    horizons: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.horizons is None:
            object.__setattr__(self, "horizons", np.arange(self.Y.shape[1]))
        if self.X.shape != self.Z.shape:
            raise DesignError("X and Z must have the same shape")
        if self.Y.shape[0] != self.X.shape[0]:
            raise DesignError("Y and X row counts differ")

    @property
    def T(self) -> int:
        return self.X.shape[0]

    @property
    def J(self) -> int:
        return self.X.shape[1]

    @property
    def H(self) -> int:
        return self.Y.shape[1] - 1

    @property
    def K(self) -> int:
        return self.J * (self.H + 1)

    @property
    def treatment_names(self) -> tuple[str, ...]:
        return self.columns[: self.n_treatments]

    def coord(self, h: int, j: int) -> int:
        """Stacked position of covariate ``j`` at horizon index ``h``."""
        if not (0 <= h <= self.H and 0 <= j < self.J):
            raise IndexError(f"(h={h}, j={j}) outside {self.H + 1}x{self.J} grid")
        return h * self.J + j

    def path_coords(self, j: int) -> np.ndarray:
        """Stacked positions of covariate ``j`` across all horizons."""
        return np.arange(self.H + 1) * self.J + j

    def exogenous(self) -> np.ndarray:
        """Columns shared by X and Z (everything except the treatments)."""
        return self.X[:, self.n_treatments:]


def trim_bounds(raw_length: int, lags: int, horizon: int, kind: str = LD) -> tuple[int, int]:
    """First and last usable projection origin (0-based, inclusive)."""
    if raw_length <= lags + horizon + 1:
        raise DesignError(
            f"{raw_length} observations cannot support {lags} lags and horizon {horizon}"
        )
    first = lags + 1 if kind == LD else lags
    last = raw_length - 1 - horizon
    if last < first:
        raise DesignError("no usable projection origins after trimming")
    return first, last


def _select(names, wanted, what):
    if wanted is None:
        return list(range(len(names)))
    idx = []
    for name in wanted:
        if name not in names:
            raise DesignError(f"unknown {what} {name!r}")
        idx.append(names.index(name))
    return idx


def build_design(dataset: Dataset, config: SpecConfig, first_origin: int | None = None) -> LpDesign:
    """Assemble X, Z and Y on the common trimmed origin set.

    ``first_origin`` can push the start of the sample later (used by the
    lead placebo, which needs extra history).
    """
    y = dataset.outcome
    first, last = trim_bounds(len(y), config.lags, config.horizon, config.kind)
    if first_origin is not None:
        first = max(first, first_origin)
    t = np.arange(first, last + 1)

    ti = _select(dataset.treatment_names, config.treatments, "treatment")
    ci = _select(dataset.control_names, config.controls, "control")
    treat = dataset.treatments[t][:, ti]
    inst = dataset.instruments[t][:, ti]
    names = [dataset.treatment_names[i] for i in ti] + ["const"]

    blocks = [np.ones((len(t), 1))]
    if config.lags:
        lag_idx = t[:, None] - np.arange(1, config.lags + 1)[None, :]
        if config.kind == LD:
            blocks.append(y[lag_idx] - y[lag_idx - 1])
            names += [f"dy_lag{l}" for l in range(1, config.lags + 1)]
        else:
            blocks.append(y[lag_idx])
            names += [f"y_lag{l}" for l in range(1, config.lags + 1)]
    if config.n_fourier:
        cal = fourier_features(dataset.dates[t], config.n_fourier)
        blocks += [cal.sin_terms, cal.cos_terms]
        names += [f"sin{n}" for n in range(1, config.n_fourier + 1)]
        names += [f"cos{n}" for n in range(1, config.n_fourier + 1)]
    if ci:
        blocks.append(dataset.controls[t][:, ci])
        names += [dataset.control_names[i] for i in ci]
    if config.day_of_week:
        blocks.append(day_of_week_indicators(dataset.dates[t]))
        names += [f"dow_{d}" for d in DOW_NAMES]
    if dataset.indicators.shape[1]:
        blocks.append(dataset.indicators[t])
        names += list(dataset.indicator_names)

    exog = np.hstack(blocks)
    X = np.hstack([treat, exog])
    Z = np.hstack([inst, exog])

    lead_idx = t[:, None] + np.arange(config.horizon + 1)[None, :]
    Y = y[lead_idx]
    if config.kind == LD:
        Y = Y - y[t - 1][:, None]

    if len(t) <= X.shape[1]:
        raise DesignError(f"only {len(t)} usable origins for {X.shape[1]} regressors")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Z)) and np.all(np.isfinite(Y))):
        raise DesignError("non-finite entries in the design")
    return LpDesign(X=X, Z=Z, Y=Y, origins=t, columns=tuple(names),
                    n_treatments=len(ti), kind=config.kind)
