import csv

import numpy as np
import pytest
from scipy import stats

from oracles import dense_gaussian, half_cauchy_quantile
from qblpiv.gmm import build_moment_model
from qblpiv.prior import roughness, smoothing_precision, stacked_prior_precision
from qblpiv.sampler import (FLAT, ROUGHNESS, Chain, McmcConfig, batch_means_se,
                            draw_coefficients, make_rng, posterior_mean, run_gibbs, tau_shape,
                            update_nu, update_tau, write_chain_csv)


def test_draw_coefficients_scalar_example():
    rng = make_rng(0, 0)
    K = 4
    draws = np.array([draw_coefficients(np.eye(K), np.eye(K), np.full(K, 2.0), rng)
                      for _ in range(20_000)])
    # Omega = I/2, so the target is N(1, 1/2).
    se = np.sqrt(0.5 / len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - 1.0) < 4 * se)
    assert np.all(np.abs(draws.var(axis=0) - 0.5) < 0.03)


def test_draw_coefficients_against_dense_oracle(small_design):
    model = build_moment_model(small_design)
    ups = model.upsilon
    Pi = stacked_prior_precision(smoothing_precision(small_design.H, 4.0),
                                 np.full(small_design.J, 0.5))
    mean, omega = dense_gaussian(ups, Pi, model.theta_star)
    rng = make_rng(1, 0)
    draws = np.array([draw_coefficients(ups, Pi, model.theta_star, rng) for _ in range(8000)])
    se = np.sqrt(np.diag(omega) / len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - mean) < 4.5 * se)
    err = np.linalg.norm(np.cov(draws.T) - omega) / np.linalg.norm(omega)
    assert err < 0.10


def test_tau_shape():
    assert tau_shape(8) == 4.5
    assert tau_shape(0) == 0.5


def test_update_tau_inverse_gamma_mean():
    rng = make_rng(2, 0)
    Q = smoothing_precision(7, 4.0)
    draws = np.array([update_tau(np.zeros(8), Q, 1.0, rng) for _ in range(100_000)])
    # IG(4.5, 1) has mean 1/3.5 and variance 1/(3.5^2 * 2.5).
    se = np.sqrt(1 / (3.5**2 * 2.5) / len(draws))
    assert abs(draws.mean() - 1 / 3.5) < 3 * se


def test_update_tau_vectorized_matches_paths():
    Q = smoothing_precision(3, 4.0)
    paths = np.random.default_rng(0).standard_normal((4, 3))
    nu = np.array([0.5, 1.0, 2.0])
    joint = update_tau(paths, Q, nu, make_rng(5, 0))
    rng = make_rng(5, 0)
    g = rng.standard_gamma(tau_shape(4), size=3)
    expected = (1 / nu + 0.5 * np.array([paths[:, j] @ Q @ paths[:, j] for j in range(3)])) / g
    np.testing.assert_allclose(joint, expected, rtol=1e-12)


def test_update_nu_distribution():
    rng = make_rng(3, 0)
    draws = np.array([update_nu(1.0, 1.0, rng) for _ in range(50_000)])
    # IG(1, 2): P(nu <= x) = exp(-2 / x).
    res = stats.kstest(draws, lambda x: np.exp(-2.0 / x))
    assert res.pvalue > 1e-3
    # kappa -> infinity leaves rate 1/tau^2
    big = update_nu(0.25, 1e12, make_rng(4, 0))
    ref = 4.0 / make_rng(4, 0).standard_exponential()
    assert np.isclose(big, ref, rtol=1e-12)


def test_empty_path_gives_half_cauchy():
    rng = make_rng(6, 0)
    Q0 = np.zeros((0, 0))
    tau2, nu = 1.0, 1.0
    out = np.empty(100_000)
    for i in range(len(out)):
        tau2 = update_tau(np.zeros(0), Q0, nu, rng)
        nu = update_nu(tau2, 1.0, rng)
        out[i] = np.sqrt(tau2)
    for p in (0.25, 0.5, 0.75):
        assert abs(np.quantile(out, p) / half_cauchy_quantile(p) - 1) < 0.05


def test_zero_path_of_length_eight_collapses_toward_zero():
    # With theta_j = 0 over H + 1 = 8 horizons the conditional for tau_j carries
    # a tau^-8 factor that the half-Cauchy tail cannot offset near zero, so the
    # chain drifts down rather than settling on the half-Cauchy law.
    rng = make_rng(7, 0)
    Q = smoothing_precision(7, 4.0)
    tau2, nu = 1.0, 1.0
    taus = []
    with np.errstate(divide="ignore", over="ignore"):
        for _ in range(5_000):
            tau2 = update_tau(np.zeros(8), Q, nu, rng)
            nu = update_nu(tau2, 1.0, rng)
            taus.append(np.sqrt(tau2))
    taus = np.array(taus)
    assert np.median(taus[:100]) > np.median(taus[-100:])
    assert np.median(taus[-1000:]) < 1e-3 * half_cauchy_quantile(0.5)


def test_config_validation():
    with pytest.raises(ValueError):
        McmcConfig(n_draws=10, n_burn=10)
    with pytest.raises(ValueError):
        McmcConfig(prior="lasso")
    assert McmcConfig(prior="rp").prior == ROUGHNESS
    assert McmcConfig(n_draws=25, n_burn=5, thin=3).n_kept == 7


def test_flat_chain_is_centered_at_theta_star(dgp_design):
    model = build_moment_model(dgp_design)
    chain = run_gibbs(model, McmcConfig(n_draws=21_000, n_burn=1_000, prior=FLAT, seed=3))
    sd = chain.theta.std(axis=0)
    assert np.all(np.abs(posterior_mean(chain) - model.theta_star) < 0.02 * sd)
    assert chain.tau is None


def test_chains_are_deterministic(small_design):
    model = build_moment_model(small_design)
    cfg = McmcConfig(n_draws=1500, n_burn=500, seed=9)
    a, b = run_gibbs(model, cfg), run_gibbs(model, cfg)
    np.testing.assert_array_equal(a.theta, b.theta)
    np.testing.assert_array_equal(a.tau, b.tau)
    c = run_gibbs(model, McmcConfig(n_draws=1500, n_burn=500, seed=9, chain_id=1))
    assert not np.array_equal(a.theta, c.theta)


def test_roughness_chain_properties(dgp_design):
    model = build_moment_model(dgp_design)
    rp = run_gibbs(model, McmcConfig(n_draws=4000, n_burn=1000, thin=2, seed=1))
    assert len(rp) == 1500
    assert rp.tau.shape == (1500, dgp_design.J)
    assert np.all(rp.tau > 0)
    # the prior shrinks the mean path toward smoothness
    assert roughness(posterior_mean(rp), dgp_design.J) < roughness(model.theta_star,
                                                                   dgp_design.J)


def test_initial_scales_do_not_matter_after_burn_in(small_design):
    model = build_moment_model(small_design)
    means = []
    for tau0 in (0.1, 10.0):
        cfg = McmcConfig(n_draws=12_000, n_burn=2_000, seed=int(10 * tau0), tau_init=tau0)
        chain = run_gibbs(model, cfg)
        means.append((posterior_mean(chain), batch_means_se(chain.theta)))
    (m1, s1), (m2, s2) = means
    assert np.all(np.abs(m1 - m2) < 5 * np.sqrt(s1**2 + s2**2) + 1e-12)


def test_fixed_coordinates_stay_at_theta_star(small_design):
    from qblpiv.design import LEVEL, LpDesign
    d = small_design
    X = d.X.copy()
    Y = d.Y.copy()
    Y[:, 0] = X[:, 2]  # an outcome lag, fitted exactly
    d = LpDesign(X=X, Z=d.Z, Y=Y, origins=d.origins, columns=d.columns,
                 n_treatments=d.n_treatments, kind=LEVEL)
    model = build_moment_model(d)
    assert model.fixed[: d.J].all() and not model.fixed[d.J:].any()
    for prior in (FLAT, ROUGHNESS):
        chain = run_gibbs(model, McmcConfig(n_draws=600, n_burn=100, prior=prior))
        np.testing.assert_array_equal(chain.theta[:, : d.J],
                                      np.broadcast_to(model.theta_star[: d.J], (500, d.J)))
        assert np.all(chain.theta[:, d.J:].std(axis=0) > 0)


def test_posterior_mean_examples():
    cfg = McmcConfig(n_draws=2, n_burn=0)
    a, b = np.array([1.0, 2.0]), np.array([3.0, -2.0])
    assert np.array_equal(posterior_mean(Chain(a[None], None, cfg)), a)
    assert np.array_equal(posterior_mean(Chain(np.stack([a, b]), None, cfg)), [2.0, 0.0])
    with pytest.raises(ValueError):
        posterior_mean(Chain(np.zeros((0, 2)), None, cfg))


def test_batch_means_se_iid():
    x = np.random.default_rng(0).standard_normal((50_000, 2))
    se = batch_means_se(x)
    assert np.all(np.abs(se / (1 / np.sqrt(50_000)) - 1) < 0.35)


def test_write_chain_csv(tmp_path, small_design):
    model = build_moment_model(small_design)
    chain = run_gibbs(model, McmcConfig(n_draws=30, n_burn=10, thin=5))
    paths = write_chain_csv(chain, tmp_path)
    assert [p.name for p in paths] == ["theta_draws.csv", "tau_draws.csv"]
    with paths[0].open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["iteration", "coordinate", "value"]
    assert len(rows) == 1 + 4 * small_design.K
    assert {int(r[0]) for r in rows[1:]} == {10, 15, 20, 25}
    assert float(rows[1][2]) == chain.theta[0, 0]
