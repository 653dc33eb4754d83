from fractions import Fraction

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from qblpiv.instruments import (InstrumentError, PowerCurveParams, build_potentials,
                                capacity_weights, daily_solar_potential, daily_wind_potential,
                                power_curve, wind_speed, zone_aggregate)


def test_wind_speed_examples():
    assert wind_speed(3, 4) == 5
    assert wind_speed(0, 0) == 0
    assert wind_speed(-6, 8) == 10


def test_power_curve_examples():
    assert power_curve(8.0) == pytest.approx(float(Fraction(485, 2170)), abs=1e-15)
    assert power_curve(13.0) == 1.0
    assert power_curve(3.0) == 0.0
    assert power_curve(2.0) == 0.0
    assert power_curve(30.0) == 0.0
    assert power_curve(25.0) == 0.0
    with pytest.raises(InstrumentError):
        power_curve(-1.0)
    with pytest.raises(InstrumentError):
        PowerCurveParams(cut_in=5, rated=4)


def test_power_curve_monotone_on_ramp():
    ws = np.linspace(0, 24.9, 500)
    q = power_curve(ws)
    assert np.all(np.diff(q) >= 0) and q.min() == 0 and q.max() == 1


def test_daily_potentials():
    assert daily_wind_potential(np.ones(24)) == 1
    assert daily_wind_potential(np.r_[np.ones(12), np.zeros(12)]) == 0.5
    with pytest.raises(InstrumentError):
        daily_wind_potential(np.ones(23))
    assert daily_solar_potential(np.zeros(24)) == 0
    assert daily_solar_potential(np.r_[5.0, np.zeros(23)]) == 5
    with pytest.raises(InstrumentError):
        daily_solar_potential(np.r_[-1.0, np.zeros(23)])


def test_capacity_weights_examples():
    np.testing.assert_array_equal(capacity_weights([1, 1]), [0.5, 0.5])
    np.testing.assert_array_equal(capacity_weights([3, 1]), [0.75, 0.25])
    np.testing.assert_array_equal(capacity_weights([0, 5]), [0, 1])
    for bad in ([0, 0], [-1, 2]):
        with pytest.raises(InstrumentError):
            capacity_weights(bad)


@given(arrays(float, st.integers(1, 30), elements=st.floats(0, 1e4)))
def test_weights_sum_to_one(caps):
    if caps.sum() <= 0:
        return
    w = capacity_weights(caps)
    assert abs(w.sum() - 1) <= 1e-12
    assert np.all(w >= 0)


def test_zone_aggregate_examples():
    cell = np.random.default_rng(0).random(10)
    np.testing.assert_array_equal(zone_aggregate(cell[None], [1.0]), cell)
    np.testing.assert_allclose(zone_aggregate([np.full(5, 0.2), np.full(5, 0.6)], [0.5, 0.5]),
                               0.4)
    with pytest.raises(InstrumentError):
        zone_aggregate([cell, cell], [1.0])


@given(st.integers(1, 6), st.integers(0, 1000))
def test_identical_cells_aggregate_to_the_cell(n_cells, seed):
    rng = np.random.default_rng(seed)
    cell = rng.random(20)
    w = capacity_weights(rng.random(n_cells) + 1e-3)
    np.testing.assert_allclose(zone_aggregate(np.tile(cell, (n_cells, 1)), w), cell,
                               rtol=1e-12)


def weather_frame(cells, days=2, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for c in cells:
        for ts in pd.date_range("2020-01-01", periods=24 * days, freq="h"):
            rows.append((c, ts.isoformat(), rng.normal(0, 8), rng.normal(0, 8),
                         max(0.0, rng.normal(100, 50))))
    return pd.DataFrame(rows, columns=["cell_id", "timestamp", "u100", "v100", "ssr"])


def test_build_potentials_single_and_two_cells():
    weather = weather_frame(["a", "b"])
    one = build_potentials(weather[weather.cell_id == "a"],
                           pd.DataFrame({"cell_id": ["a"], "wind_mw": [1.0], "solar_mw": [1.0]}))
    a = weather[weather.cell_id == "a"]
    q = power_curve(wind_speed(a.u100.to_numpy(), a.v100.to_numpy())).reshape(2, 24).mean(axis=1)
    np.testing.assert_allclose(one.wind_potential, q, rtol=1e-12)
    np.testing.assert_allclose(one.solar_potential, a.ssr.to_numpy().reshape(2, 24).sum(axis=1))

    cap = pd.DataFrame({"cell_id": ["a", "b"], "wind_mw": [2.0, 2.0], "solar_mw": [1.0, 1.0]})
    two = build_potentials(weather, cap)
    b = build_potentials(weather[weather.cell_id == "b"], cap[cap.cell_id == "b"])
    np.testing.assert_allclose(two.wind_potential, 0.5 * (one.wind_potential + b.wind_potential))
    assert list(two.columns) == ["date", "zone", "wind_potential", "solar_potential"]


def test_build_potentials_errors():
    weather = weather_frame(["a"])
    with pytest.raises(InstrumentError, match="empty"):
        build_potentials(weather, pd.DataFrame(columns=["cell_id", "wind_mw", "solar_mw"]))
    with pytest.raises(InstrumentError, match="expected 24"):
        build_potentials(weather.iloc[1:], pd.DataFrame({"cell_id": ["a"], "wind_mw": [1.0],
                                                         "solar_mw": [1.0]}))
    with pytest.raises(InstrumentError, match="missing column"):
        build_potentials(weather.drop(columns="ssr"),
                         pd.DataFrame({"cell_id": ["a"], "wind_mw": [1.0], "solar_mw": [1.0]}))
