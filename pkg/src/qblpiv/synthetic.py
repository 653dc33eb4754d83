"""Desk-scale synthetic electricity-market data and a Danish holiday calendar.

Price follows an AR(1) driven by wind and solar generation, load and
temperature. An unobserved demand shock moves both price and generation
(curtailment), so OLS is biased while the weather-driven potentials remain
valid instruments. Generation lowers price on impact; the response at longer
horizons also reflects the persistence of the potentials.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import asdict, dataclass
from importlib import resources

import numpy as np
import pandas as pd
from dateutil.easter import easter

from .dataset import Schema, day_of_week_indicators, holiday_indicator, year_position

SYNTHETIC_FILE = "synthetic_electricity.csv"
HOLIDAY_FILE = "danish_holidays.csv"

SYNTHETIC_SCHEMA = Schema(
    date="date",
    outcome="price",
    treatments=("wind_gen", "solar_gen"),
    instruments=("wind_pot", "solar_pot"),
    controls=("load", "temperature"),
    indicators=("holiday",),
)

# Offsets from Easter Sunday, in days.
_EASTER_HOLIDAYS = {
    "Maundy Thursday": -3,
    "Good Friday": -2,
    "Easter Sunday": 0,
    "Easter Monday": 1,
    "Ascension Day": 39,
    "Whit Sunday": 49,
    "Whit Monday": 50,
}
_FIXED_HOLIDAYS = {
    "New Year's Day": (1, 1),
    "Constitution Day": (6, 5),
    "Christmas Eve": (12, 24),
    "Christmas Day": (12, 25),
    "Boxing Day": (12, 26),
    "New Year's Eve": (12, 31),
}


def danish_holidays(years) -> pd.DataFrame:
    """Public and customary Danish holidays; columns (date, name), sorted by date.

    Great Prayer Day (fourth Friday after Easter) is included up to 2023, the
    last year it was observed.
    """
    rows = []
    for year in years:
        e = easter(year)
        for name, offset in _EASTER_HOLIDAYS.items():
            rows.append((e + dt.timedelta(days=offset), name))
        if year <= 2023:
            rows.append((e + dt.timedelta(days=26), "Great Prayer Day"))
        for name, (month, day) in _FIXED_HOLIDAYS.items():
            rows.append((dt.date(year, month, day), name))
    rows.sort()
    return pd.DataFrame({"date": [d.isoformat() for d, _ in rows],
                         "name": [n for _, n in rows]})


def load_danish_holidays() -> pd.DataFrame:
    """The bundled holiday file (2010-2030)."""
    with resources.files("qblpiv.data").joinpath(HOLIDAY_FILE).open("r") as fh:
        return pd.read_csv(fh, dtype=str)


def bundled_dataset_path():
    return resources.files("qblpiv.data").joinpath(SYNTHETIC_FILE)


@dataclass(frozen=True)
class SyntheticParams:
    n_days: int = 1461
    start: str = "2015-01-01"
    phi: float = 0.6
    beta_wind: float = -0.8
    beta_solar: float = -0.4
    load_effect: float = 0.5
    temp_effect: float = -0.1
    wind_capacity: float = 10.0
    solar_capacity: float = 2.0
    curtailment: float = 0.6
    demand_sd: float = 1.0
    noise_sd: float = 1.0
    burn_in: int = 100


def make_synthetic(params: SyntheticParams = SyntheticParams(), seed: int = 0) -> pd.DataFrame:
    """Daily price, generation, potentials, load, temperature and holidays.

    Columns follow ``SYNTHETIC_SCHEMA``. Generation is in GWh, potentials in
    capacity-factor (wind) and kWh/m2 (solar) units.
    """
    rng = np.random.default_rng(seed)
    n = params.n_days + params.burn_in
    start = np.datetime64(params.start) - np.timedelta64(params.burn_in, "D")
    dates = start + np.arange(n).astype("timedelta64[D]")
    winter = np.cos(2 * np.pi * year_position(dates))

    def ar1(rho, sd):
        shocks = sd * rng.standard_normal(n)
        out = np.empty(n)
        prev = 0.0
        for t in range(n):
            prev = rho * prev + shocks[t]
            out[t] = prev
        return out

    temperature = 9.0 - 8.0 * winter + ar1(0.8, 1.5)
    wind_latent = 0.4 * winter + ar1(0.6, 1.0)
    wind_pot = 1.0 / (1.0 + np.exp(-wind_latent))
    clear_sky = 3.5 - 3.0 * winter
    solar_pot = clear_sky * rng.beta(4.0, 2.0, n)

    years = range(int(str(dates[0])[:4]), int(str(dates[-1])[:4]) + 1)
    holiday = holiday_indicator(dates, danish_holidays(years)["date"].tolist())
    weekend = day_of_week_indicators(dates)[:, 4:].sum(axis=1)

    demand = params.demand_sd * rng.standard_normal(n)
    load = 100.0 + 12.0 * winter - 8.0 * weekend - 10.0 * holiday + 3.0 * demand \
        + rng.standard_normal(n)
    # High demand lowers curtailment, so generation co-moves with the price shock.
    wind_gen = params.wind_capacity * wind_pot + params.curtailment * demand \
        + 0.5 * rng.standard_normal(n)
    solar_gen = params.solar_capacity * solar_pot + 0.5 * params.curtailment * demand \
        + 0.3 * rng.standard_normal(n)

    shock = (params.beta_wind * wind_gen + params.beta_solar * solar_gen
             + params.load_effect * (load - 100.0) + params.temp_effect * temperature
             + 2.0 * demand + params.noise_sd * rng.standard_normal(n))
    price = np.empty(n)
    prev = 40.0
    for t in range(n):
        prev = params.phi * prev + (1 - params.phi) * 40.0 + shock[t]
        price[t] = prev

    keep = slice(params.burn_in, None)
    return pd.DataFrame({
        "date": [str(d) for d in dates[keep]],
        "price": price[keep],
        "wind_gen": wind_gen[keep],
        "solar_gen": solar_gen[keep],
        "wind_pot": wind_pot[keep],
        "solar_pot": solar_pot[keep],
        "load": load[keep],
        "temperature": temperature[keep],
        "holiday": holiday[keep].astype(int),
    })


def synthetic_manifest(params: SyntheticParams, seed: int) -> dict:
    return {"seed": seed, **asdict(params)}
