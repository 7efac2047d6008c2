"""Two-component 1-D Gaussian mixture over per-sample losses.

EM with deterministic percentile initialization: means at the 10th/90th
percentiles, equal weights, both variances set to the overall variance
(floored). Converges on relative log-likelihood change < 1e-6, capped at
200 iterations. The smaller-mean component models the clean samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VAR_FLOOR = 1e-8
DEGENERATE_VAR = 1e-12
MAX_ITER = 200
REL_TOL = 1e-6


@dataclass
class GmmFit:
    mean_clean: float
    mean_noisy: float
    var_clean: float
    var_noisy: float
    weight_clean: float
    weight_noisy: float
    iterations: int
    converged: bool
    degenerate: bool = False


def _log_density(x: np.ndarray, mean: float, var: float) -> np.ndarray:
    return -0.5 * (np.log(2 * np.pi * var) + (x - mean) ** 2 / var)


def fit_gmm_1d(losses, seed: int = 0) -> GmmFit:
    """Fit the mixture by EM. `seed` is accepted for interface symmetry;
    initialization is deterministic so it is unused."""
    x = np.asarray(losses, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise ValueError("need at least 2 loss values")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite loss values")

    if float(np.var(x)) < DEGENERATE_VAR:
        m = float(np.mean(x))
        return GmmFit(m, m, VAR_FLOOR, VAR_FLOOR, 0.5, 0.5,
                      iterations=0, converged=True, degenerate=True)

    means = np.array([np.percentile(x, 10), np.percentile(x, 90)])
    if means[0] == means[1]:
        # heavy-outlier vectors can make both percentiles coincide; EM cannot
        # break that symmetry, so spread the init to the data range instead
        means = np.array([float(x.min()), float(x.max())])
    var0 = max(float(np.var(x)), VAR_FLOOR)
    variances = np.array([var0, var0])
    weights = np.array([0.5, 0.5])

    prev_ll = -np.inf
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        # E-step
        log_comp = np.stack([
            np.log(weights[c]) + _log_density(x, means[c], variances[c])
            for c in range(2)
        ])  # (2, n)
        log_norm = np.logaddexp(log_comp[0], log_comp[1])
        resp = np.exp(log_comp - log_norm)  # (2, n)
        ll = float(np.sum(log_norm))
        # M-step
        nk = resp.sum(axis=1)
        weights = nk / x.shape[0]
        means = (resp @ x) / nk
        variances = np.array([
            max(float((resp[c] @ (x - means[c]) ** 2) / nk[c]), VAR_FLOOR)
            for c in range(2)
        ])
        if np.isfinite(prev_ll) and abs(ll - prev_ll) <= REL_TOL * max(abs(prev_ll), 1.0):
            converged = True
            break
        prev_ll = ll

    clean, noisy = (0, 1) if means[0] <= means[1] else (1, 0)
    return GmmFit(
        mean_clean=float(means[clean]), mean_noisy=float(means[noisy]),
        var_clean=float(variances[clean]), var_noisy=float(variances[noisy]),
        weight_clean=float(weights[clean]), weight_noisy=float(weights[noisy]),
        iterations=it, converged=converged,
    )


def clean_posteriors(fit: GmmFit, losses) -> np.ndarray:
    """Bayes posterior of the clean (smaller-mean) component per loss value."""
    x = np.asarray(losses, dtype=np.float64)
    if fit.degenerate:
        return np.ones_like(x)
    log_c = np.log(fit.weight_clean) + _log_density(x, fit.mean_clean, fit.var_clean)
    log_n = np.log(fit.weight_noisy) + _log_density(x, fit.mean_noisy, fit.var_noisy)
    return np.exp(log_c - np.logaddexp(log_c, log_n))


def adaptive_threshold(w) -> float:
    w = np.asarray(w, dtype=np.float64)
    if w.size < 1:
        raise ValueError("empty posterior vector")
    return float(np.mean(w))


def partition(w, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Clean indices (w_i >= tau, inclusive) and the noisy complement."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    w = np.asarray(w, dtype=np.float64)
    clean = np.flatnonzero(w >= tau)
    noisy = np.flatnonzero(w < tau)
    return clean, noisy
