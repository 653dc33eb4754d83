"""Weather-based renewable-potential instruments.

Hourly 100m wind components and surface solar radiation per grid cell are
turned into daily wind-power and solar potentials, then aggregated to zones
with installed-capacity weights.

Input contract (long-format CSV, one row per cell and hour)::

    cell_id, timestamp, u100, v100, ssr

Capacities (one row per cell; ``zone`` optional, default a single zone)::

    cell_id, zone, wind_mw, solar_mw

Days are the calendar dates of the timestamps as given; each cell-day must
have exactly 24 rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

HOURS_PER_DAY = 24


class InstrumentError(ValueError):
    pass


@dataclass(frozen=True)
class PowerCurveParams:
    cut_in: float = 3.0
    rated: float = 13.0
    cut_out: float = 25.0

    def __post_init__(self):
        if not 0 < self.cut_in < self.rated < self.cut_out:
            raise InstrumentError("power curve needs 0 < cut_in < rated < cut_out")


def wind_speed(u, v):
    return np.hypot(u, v)


def power_curve(ws, params: PowerCurveParams = PowerCurveParams()):
    """Normalized turbine output: cubic ramp from cut-in to rated, flat to cut-out."""
    ws = np.asarray(ws, dtype=float)
    if np.any(ws < 0):
        raise InstrumentError("wind speed must be non-negative")
    lo3, hi3 = params.cut_in**3, params.rated**3
    ramp = (ws**3 - lo3) / (hi3 - lo3)
    out = np.where(ws < params.cut_in, 0.0,
                   np.where(ws < params.rated, ramp,
                            np.where(ws < params.cut_out, 1.0, 0.0)))
    return out if out.ndim else float(out)


def _day(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != HOURS_PER_DAY:
        raise InstrumentError(f"expected {HOURS_PER_DAY} hourly values, got {values.shape[-1]}")
    return values


def daily_wind_potential(hourly_q) -> float:
    """Mean of 24 hourly power-curve values."""
    return _day(hourly_q).mean(axis=-1)


def daily_solar_potential(hourly_ssr) -> float:
    """Accumulated radiation over 24 hours."""
    ssr = _day(hourly_ssr)
    if np.any(ssr < 0):
        raise InstrumentError("solar radiation must be non-negative")
    return ssr.sum(axis=-1)


def capacity_weights(capacities) -> np.ndarray:
    c = np.asarray(capacities, dtype=float)
    if np.any(c < 0):
        raise InstrumentError("capacities must be non-negative")
    total = c.sum()
    if not total > 0:
        raise InstrumentError("capacities are all zero")
    return c / total


def zone_aggregate(cell_series, weights) -> np.ndarray:
    """Weighted sum over cells; ``cell_series`` is (n_cells, n_days)."""
    cells = np.atleast_2d(np.asarray(cell_series, dtype=float))
    w = np.asarray(weights, dtype=float)
    if cells.shape[0] != len(w):
        raise InstrumentError(f"{cells.shape[0]} cell series but {len(w)} weights")
    if not np.isclose(w.sum(), 1.0, atol=1e-12):
        raise InstrumentError("weights must sum to one")
    return w @ cells


def daily_cell_potentials(weather: pd.DataFrame,
                          params: PowerCurveParams = PowerCurveParams()) -> pd.DataFrame:
    """Per (cell_id, date): daily wind potential and accumulated solar radiation."""
    required = {"cell_id", "timestamp", "u100", "v100", "ssr"}
    missing = required - set(weather.columns)
    if missing:
        raise InstrumentError(f"weather data missing column(s) {sorted(missing)}")
    df = weather.copy()
    if df[["u100", "v100", "ssr"]].isna().any().any():
        raise InstrumentError("weather data has missing values")
    ts = pd.to_datetime(df["timestamp"], format="ISO8601")
    df["date"] = ts.dt.strftime("%Y-%m-%d")
    df["q_wind"] = power_curve(wind_speed(df["u100"].to_numpy(float), df["v100"].to_numpy(float)),
                               params)
    counts = df.groupby(["cell_id", "date"]).size()
    if (counts != HOURS_PER_DAY).any():
        (cell, day), n = next((k, v) for k, v in counts.items() if v != HOURS_PER_DAY)
        raise InstrumentError(f"cell {cell} on {day} has {n} hourly rows, expected 24")
    if (df["ssr"] < 0).any():
        raise InstrumentError("solar radiation must be non-negative")
    daily = df.groupby(["cell_id", "date"]).agg(wind=("q_wind", "mean"), solar=("ssr", "sum"))
    return daily.reset_index()


def build_potentials(weather: pd.DataFrame, capacity: pd.DataFrame,
                     params: PowerCurveParams = PowerCurveParams()) -> pd.DataFrame:
    """Zone-level daily potentials with columns (date, zone, wind_potential, solar_potential)."""
    if capacity.empty:
        raise InstrumentError("capacity table is empty")
    cap = capacity.copy()
    if "zone" not in cap.columns:
        cap["zone"] = "all"
    daily = daily_cell_potentials(weather, params)
    out = []
    for zone, group in cap.groupby("zone", sort=True):
        cells = group["cell_id"].tolist()
        sub = daily[daily["cell_id"].isin(cells)]
        wide_w = sub.pivot(index="cell_id", columns="date", values="wind").reindex(cells)
        wide_s = sub.pivot(index="cell_id", columns="date", values="solar").reindex(cells)
        if wide_w.isna().any().any():
            raise InstrumentError(f"zone {zone}: cells lack weather data on some dates")
        ww = capacity_weights(group["wind_mw"].to_numpy(float))
        ws = capacity_weights(group["solar_mw"].to_numpy(float))
        out.append(pd.DataFrame({
            "date": wide_w.columns,
            "zone": zone,
            "wind_potential": zone_aggregate(wide_w.to_numpy(), ww),
            "solar_potential": zone_aggregate(wide_s.to_numpy(), ws),
        }))
    return pd.concat(out, ignore_index=True)


def read_weather_csv(path) -> pd.DataFrame:
    return pd.read_csv(Path(path), dtype={"cell_id": str})


def read_capacity_csv(path) -> pd.DataFrame:
    return pd.read_csv(Path(path), dtype={"cell_id": str, "zone": str})
