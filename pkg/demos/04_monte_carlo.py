# %% [markdown]
# # Monte Carlo comparison of GMM and the quasi-Bayesian estimators
# A small grid keeps this quick; the acceptance suite runs 200 replications at
# T = 200 and 1000.

# %%
from qblpiv.simulate import McGrid, run_monte_carlo, true_irf

grid = McGrid(T_values=(200,), replications=20, n_draws=4_000, n_burn=1_000, n_sim=20_000,
              seed=4)
report = run_monte_carlo(grid)
print("true response:", true_irf(grid.params, grid.horizon).round(3))

# %%
for metric in ("bias", "rmse", "coverage"):
    print(metric)
    print(report.pointwise.pivot_table(index="estimator", columns="h", values=metric).round(3))
print(report.simultaneous)
