# %% [markdown]
# # Weather-based instruments
# Hourly 100 m wind components go through a turbine power curve, are averaged
# per day, and then combined across grid cells with capacity weights.

# %%
import numpy as np
import pandas as pd

from qblpiv.instruments import build_potentials, power_curve

ws = np.array([2.0, 3.0, 8.0, 13.0, 20.0, 26.0])
for w, q in zip(ws, power_curve(ws)):
    print(f"{w:5.1f} m/s -> {q:.4f}")

# %%
rng = np.random.default_rng(0)
hours = pd.date_range("2020-01-01", periods=72, freq="h")
weather = pd.DataFrame([(cell, ts.isoformat(), rng.normal(0, 7), rng.normal(0, 7),
                         max(0.0, 400 * np.sin(np.pi * (ts.hour - 6) / 12)))
                        for cell in ("north", "south") for ts in hours],
                       columns=["cell_id", "timestamp", "u100", "v100", "ssr"])
capacity = pd.DataFrame({"cell_id": ["north", "south"], "wind_mw": [300.0, 100.0],
                         "solar_mw": [50.0, 150.0]})
print(build_potentials(weather, capacity))
