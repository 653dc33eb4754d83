# %% [markdown]
# # Instrument diagnostics
# First-stage relevance, placebo regressions of predetermined variables on the
# instruments, and lead placebos of past prices.

# %%
from qblpiv import McmcConfig, SpecConfig, load_csv
from qblpiv.diagnostics import first_stage, lead_placebo, placebo_predetermined
from qblpiv.synthetic import SYNTHETIC_SCHEMA, bundled_dataset_path

data = load_csv(bundled_dataset_path(), SYNTHETIC_SCHEMA)
config = SpecConfig(horizon=7, lags=7, n_fourier=4, day_of_week=True)
report = first_stage(data, config)
print(report.to_frame().round(3).to_string(index=False))

# %% [markdown]
# The wind potential is persistent, so lagged wind generation is predictable
# from today's potential; lagged prices much less so.

# %%
print(placebo_predetermined(data, [1, 2, 7], config).round(3).to_string(index=False))

# %% [markdown]
# Lead placebos regress y_{t-k} on today's treatments. Persistent potentials
# make the first few leads non-zero even with a valid instrument.

# %%
leads = lead_placebo(data, config, leads=range(1, 5),
                     mcmc=McmcConfig(n_draws=3_000, n_burn=1_000), n_sim=20_000)
print(leads.to_frame().round(3).to_string(index=False))
