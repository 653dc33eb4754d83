# %% [markdown]
# # The roughness prior and the Gibbs sampler
# Q = D'D + (8/rho^2) I penalizes adjacent differences and adds a small ridge.

# %%
import numpy as np

from qblpiv.prior import prior_correlation, smoothing_precision
from qblpiv.sampler import make_rng, update_nu, update_tau

print(smoothing_precision(2, 4.0))
cov = np.linalg.inv(smoothing_precision(200, 4.0))
sd = np.sqrt(np.diag(cov))
corr = cov / np.outer(sd, sd)
for d in (1, 3):
    print(f"distance {d}: interior correlation {corr[100, 100 + d]:.3f}, "
          f"approximation {prior_correlation(d, 4.0):.3f}")

# %% [markdown]
# The half-Cauchy scale is drawn through an inverse-gamma mixture. With no
# coefficients feeding the scale update the alternating draws reproduce the
# half-Cauchy law.

# %%
rng = make_rng(0, 0)
tau2, nu = 1.0, 1.0
draws = np.empty(200_000)
for i in range(len(draws)):
    tau2 = update_tau(np.zeros(0), np.zeros((0, 0)), nu, rng)
    nu = update_nu(tau2, 1.0, rng)
    draws[i] = np.sqrt(tau2)
for p in (0.25, 0.5, 0.75):
    print(f"q{int(p * 100)}: sampled {np.quantile(draws, p):.3f}, "
          f"half-Cauchy {np.tan(np.pi * p / 2):.3f}")

# %% [markdown]
# A full chain on a simulated design: retained scales are positive, and the
# flat-prior mean sits on the IV estimate.

# %%
from qblpiv import McmcConfig, SpecConfig, build_design, build_moment_model, run_gibbs
from qblpiv.simulate import DgpParams, generate_dgp

data, _ = generate_dgp(DgpParams(T=300), make_rng(1, 0))
model = build_moment_model(build_design(data, SpecConfig(horizon=7, lags=4)))
chain = run_gibbs(model, McmcConfig(n_draws=5_000, n_burn=1_000, seed=2))
print("min retained tau:", chain.tau.min().round(4))
flat = run_gibbs(model, McmcConfig(n_draws=11_000, n_burn=1_000, seed=2, prior="flat"))
gap = np.abs(flat.theta.mean(axis=0) - model.theta_star) / flat.theta.std(axis=0)
print("flat chain: max |mean - theta*| / sd =", gap.max().round(4))
