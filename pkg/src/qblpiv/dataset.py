"""Aligned daily time series: loading, validation and calendar features."""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

DOW_NAMES = ("tue", "wed", "thu", "fri", "sat", "sun")


class DatasetError(ValueError):
    """Invalid input data or schema."""


@dataclass(frozen=True)
class Schema:
    """Maps CSV columns to their role in the regression.

    ``controls`` are continuous and get standardized; ``indicators`` are 0/1
    columns (holidays, events) used as-is.
    """

    date: str
    outcome: str
    treatments: tuple[str, ...]
    instruments: tuple[str, ...]
    controls: tuple[str, ...] = ()
    indicators: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("treatments", "instruments", "controls", "indicators"):
            value = getattr(self, name)
            if isinstance(value, str):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
        if not self.treatments:
            raise DatasetError("schema needs at least one treatment")
        if len(self.instruments) != len(self.treatments):
            raise DatasetError(
                f"just-identified design needs one instrument per treatment: "
                f"{len(self.treatments)} treatments, {len(self.instruments)} instruments"
            )

    @property
    def columns(self) -> tuple[str, ...]:
        return (self.date, self.outcome, *self.treatments, *self.instruments,
                *self.controls, *self.indicators)


@dataclass(frozen=True)
class Dataset:
    """Validated aligned series.

    Array attributes are 2-D with one column per named series, except
    ``outcome`` which is 1-D. ``scales`` holds ``(mean, sd)`` for every series
    that has been standardized.
    """

    dates: np.ndarray
    outcome: np.ndarray
    treatments: np.ndarray
    instruments: np.ndarray
    controls: np.ndarray
    indicators: np.ndarray
    outcome_name: str = "y"
    treatment_names: tuple[str, ...] = ("r",)
    instrument_names: tuple[str, ...] = ("z",)
    control_names: tuple[str, ...] = ()
    indicator_names: tuple[str, ...] = ()
    scales: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.outcome)
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "outcome", np.asarray(self.outcome, dtype=float).reshape(-1))
        for name, names in (("treatments", self.treatment_names),
                            ("instruments", self.instrument_names),
                            ("controls", self.control_names),
                            ("indicators", self.indicator_names)):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.size == 0:
                arr = arr.reshape(n, 0)
            elif arr.ndim == 1:
                arr = arr[:, None]
            if arr.shape != (n, len(names)):
                raise DatasetError(f"{name} has shape {arr.shape}, expected {(n, len(names))}")
            object.__setattr__(self, name, arr)
        self.validate()

    def __len__(self) -> int:
        return len(self.outcome)

    @classmethod
    def from_arrays(cls, outcome, treatments, instruments, controls=None, indicators=None,
                    dates=None, start="2015-01-01", **names) -> "Dataset":
        """Build a dataset from arrays; dates default to consecutive days from ``start``."""
        outcome = np.asarray(outcome, dtype=float)
        n = len(outcome)
        treatments = np.asarray(treatments, dtype=float).reshape(n, -1)
        instruments = np.asarray(instruments, dtype=float).reshape(n, -1)
        controls = np.zeros((n, 0)) if controls is None else np.asarray(controls, float).reshape(n, -1)
        indicators = (np.zeros((n, 0)) if indicators is None
                      else np.asarray(indicators, float).reshape(n, -1))
        if dates is None:
            dates = np.datetime64(start, "D") + np.arange(n)
        names.setdefault("treatment_names", tuple(f"r{i}" for i in range(treatments.shape[1]))
                         if treatments.shape[1] > 1 else ("r",))
        names.setdefault("instrument_names", tuple(f"z{i}" for i in range(instruments.shape[1]))
                         if instruments.shape[1] > 1 else ("z",))
        names.setdefault("control_names", tuple(f"x{i}" for i in range(controls.shape[1])))
        names.setdefault("indicator_names", tuple(f"d{i}" for i in range(indicators.shape[1])))
        return cls(dates=dates, outcome=outcome, treatments=treatments, instruments=instruments,
                   controls=controls, indicators=indicators, **names)

    def validate(self) -> None:
        n = len(self.outcome)
        if self.dates.shape != (n,):
            raise DatasetError("dates and series lengths differ")
        if self.treatments.shape[1] == 0:
            raise DatasetError("at least one treatment is required")
        if self.treatments.shape[1] != self.instruments.shape[1]:
            raise DatasetError(
                f"treatment/instrument count mismatch: {self.treatments.shape[1]} vs "
                f"{self.instruments.shape[1]}"
            )
        if n > 1:
            steps = np.diff(self.dates).astype(int)
            if np.any(steps != 1):
                bad = int(np.argmax(steps != 1))
                raise DatasetError(
                    f"dates are not consecutive days: gap between {self.dates[bad]} and "
                    f"{self.dates[bad + 1]}"
                )
        for name in ("outcome", "treatments", "instruments", "controls", "indicators"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DatasetError(f"missing or non-finite values in {name}")

    def column(self, name: str) -> np.ndarray:
        """Look up any series by its name."""
        if name == self.outcome_name:
            return self.outcome
        for attr, names in (("treatments", self.treatment_names),
                            ("instruments", self.instrument_names),
                            ("controls", self.control_names),
                            ("indicators", self.indicator_names)):
            if name in names:
                return getattr(self, attr)[:, names.index(name)]
        raise KeyError(name)

    def standardized(self, treatments=True, controls=True, outcome=False,
                     instruments=False) -> "Dataset":
        """Return a copy with the selected groups standardized on the full sample."""
        scales = dict(self.scales)
        updates = {}

        def apply(attr, names):
            arr = getattr(self, attr).copy()
            for k, name in enumerate(names):
                arr[:, k], mean, sd = standardize(arr[:, k])
                scales[name] = (mean, sd)
            updates[attr] = arr

        if treatments:
            apply("treatments", self.treatment_names)
        if instruments:
            apply("instruments", self.instrument_names)
        if controls:
            apply("controls", self.control_names)
        if outcome:
            y, mean, sd = standardize(self.outcome)
            scales[self.outcome_name] = (mean, sd)
            updates["outcome"] = y
        return replace(self, scales=scales, **updates)


def standardize(series) -> tuple[np.ndarray, float, float]:
    """Center and scale to unit sample variance (denominator n - 1)."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise DatasetError("standardize needs a 1-D series of length >= 2")
    mean = float(x.mean())
    sd = float(x.std(ddof=1))
    if not sd > 0.0 or sd <= 1e-14 * max(1.0, abs(mean)):
        raise DatasetError("cannot standardize a series with zero variance")
    return (x - mean) / sd, mean, sd


def load_csv(path, schema: Schema, standardize_series: bool = True) -> Dataset:
    """Read a CSV file into a validated :class:`Dataset`.

    Treatments and continuous controls are standardized on the full sample
    unless ``standardize_series`` is false. Missing values are an error.
    """
    path = Path(path)
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    missing = [c for c in schema.columns if c not in frame.columns]
    if missing:
        raise DatasetError(f"{path.name}: missing column(s) {', '.join(missing)}")

    try:
        dates = pd.to_datetime(frame[schema.date], format="ISO8601").dt.normalize()
    except (ValueError, TypeError) as exc:
        raise DatasetError(f"{path.name}: unparseable date in column {schema.date!r}") from exc
    dates = dates.to_numpy().astype("datetime64[D]")

    def numeric(cols):
        if not cols:
            return np.zeros((len(frame), 0))
        block = frame[list(cols)].apply(lambda s: s.str.strip())
        if (block == "").any().any():
            col = block.columns[(block == "").any()].tolist()[0]
            row = int(np.argmax((block[col] == "").to_numpy()))
            raise DatasetError(f"{path.name}: missing value in column {col!r}, row {row + 2}")
        try:
            return block.astype(float).to_numpy()
        except ValueError as exc:
            raise DatasetError(f"{path.name}: non-numeric value ({exc})") from exc

    ds = Dataset(
        dates=dates,
        outcome=numeric([schema.outcome])[:, 0],
        treatments=numeric(schema.treatments),
        instruments=numeric(schema.instruments),
        controls=numeric(schema.controls),
        indicators=numeric(schema.indicators),
        outcome_name=schema.outcome,
        treatment_names=schema.treatments,
        instrument_names=schema.instruments,
        control_names=schema.controls,
        indicator_names=schema.indicators,
    )
    return ds.standardized() if standardize_series else ds


@dataclass(frozen=True)
class CalendarFeatures:
    position: np.ndarray
    sin_terms: np.ndarray
    cos_terms: np.ndarray

    @property
    def fourier_terms(self) -> np.ndarray:
        return np.hstack([self.sin_terms, self.cos_terms])


def year_position(dates) -> np.ndarray:
    """Normalized within-year position (day_of_year - 1) / days_in_year, in [0, 1)."""
    dates = np.asarray(dates, dtype="datetime64[D]")
    years = dates.astype("datetime64[Y]")
    day0 = (dates - years.astype("datetime64[D]")).astype(int)
    year_num = years.astype(int) + 1970
    leap = (year_num % 4 == 0) & ((year_num % 100 != 0) | (year_num % 400 == 0))
    return day0 / np.where(leap, 366.0, 365.0)


def fourier_features(dates, n_terms: int) -> CalendarFeatures:
    """Annual Fourier terms sin(2 pi n s_t), cos(2 pi n s_t) for n = 1..n_terms."""
    if n_terms < 0:
        raise ValueError("n_terms must be non-negative")
    s = year_position(dates)
    freq = 2.0 * np.pi * np.arange(1, n_terms + 1)
    angles = s[:, None] * freq[None, :]
    return CalendarFeatures(position=s, sin_terms=np.sin(angles), cos_terms=np.cos(angles))


def day_of_week_indicators(dates) -> np.ndarray:
    """Six 0/1 columns for Tuesday..Sunday; Monday is the omitted category."""
    dates = np.asarray(dates, dtype="datetime64[D]")
    # 1970-01-01 was a Thursday; shift so Monday == 0.
    dow = (dates.astype(int) + 3) % 7
    return (dow[:, None] == np.arange(1, 7)[None, :]).astype(float)


def holiday_indicator(dates, holidays: Sequence[dt.date | str | np.datetime64]) -> np.ndarray:
    """0/1 series marking dates that appear in ``holidays``."""
    dates = np.asarray(dates, dtype="datetime64[D]")
    marks = np.asarray(list(holidays), dtype="datetime64[D]")
    return np.isin(dates, marks).astype(float)
