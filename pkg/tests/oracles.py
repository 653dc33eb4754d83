"""Slow, independent reference implementations used only by the tests.

Each oracle is written from the defining formula with explicit loops or dense
linear algebra, and shares no code with the package.
"""
import math

import numpy as np
from scipy import optimize, stats


def naive_design(y, r, z, lags, horizon, kind):
    """Single treatment, intercept and outcome lags only; built row by row."""
    n = len(y)
    first = lags + 1 if kind == "ld" else lags
    last = n - 1 - horizon
    X, Z, Y = [], [], []
    for t in range(first, last + 1):
        if kind == "ld":
            lag_terms = [y[t - l] - y[t - l - 1] for l in range(1, lags + 1)]
            Y.append([y[t + h] - y[t - 1] for h in range(horizon + 1)])
        else:
            lag_terms = [y[t - l] for l in range(1, lags + 1)]
            Y.append([y[t + h] for h in range(horizon + 1)])
        X.append([r[t], 1.0] + lag_terms)
        Z.append([z[t], 1.0] + lag_terms)
    return np.array(X), np.array(Z), np.array(Y)


def per_horizon_iv(X, Z, Y):
    """Just-identified IV one horizon at a time, stacked horizon-major."""
    out = []
    for h in range(Y.shape[1]):
        out.append(np.linalg.solve(Z.T @ X, Z.T @ Y[:, h]))
    return np.concatenate(out)


def moments_loop(X, Z, Y, theta):
    T, J = X.shape
    H1 = Y.shape[1]
    M = np.zeros((T, J * H1))
    for t in range(T):
        for h in range(H1):
            e = Y[t, h] - X[t] @ theta[h * J:(h + 1) * J]
            M[t, h * J:(h + 1) * J] = e * Z[t]
    return M


def bartlett_loop(M, B):
    T, K = M.shape
    S = np.zeros((K, K))
    for t in range(T):
        S += np.outer(M[t], M[t])
    for b in range(1, B):
        w = 1.0 - b / B
        G = np.zeros((K, K))
        for t in range(b, T):
            G += np.outer(M[t], M[t - b])
        S += w * (G + G.T)
    return S / T


def dense_gaussian(upsilon, pi, theta_star):
    """Mean and covariance of N(Omega Upsilon theta*, Omega) by explicit inversion."""
    omega = np.linalg.inv(upsilon + pi)
    return omega @ upsilon @ theta_star, omega


def independent_max_quantile(n_coords, level):
    """c with (2 Phi(c) - 1)^n = level: quantile of the max of n independent |N(0,1)|."""
    target = level ** (1.0 / n_coords)
    return optimize.brentq(lambda c: 2 * stats.norm.cdf(c) - 1 - target, 0.0, 10.0)


def half_cauchy_quantile(p, kappa=1.0):
    return kappa * math.tan(math.pi * p / 2)


def partial_r2_fwl(dep, inst, exog):
    """Squared partial correlation of dep and a single instrument given exog."""
    P = exog @ np.linalg.pinv(exog)
    a = dep - P @ dep
    b = inst - P @ inst
    return (a @ b) ** 2 / ((a @ a) * (b @ b))


def hc1_wald_loop(dep, excluded, exog):
    X = np.column_stack([excluded, exog])
    n, k = X.shape
    q = excluded.shape[1]
    beta = np.linalg.lstsq(X, dep, rcond=None)[0]
    e = dep - X @ beta
    bread = np.linalg.inv(X.T @ X)
    meat = np.zeros((k, k))
    for i in range(n):
        meat += e[i] ** 2 * np.outer(X[i], X[i])
    V = bread @ meat @ bread * n / (n - k)
    b = beta[:q]
    return float(b @ np.linalg.solve(V[:q, :q], b))
