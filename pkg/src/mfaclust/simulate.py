"""Synthetic-data generators for the two benchmark scenarios, the
MAP-oracle clustering rule and the adjusted Rand index.

Scenario 1 produces well-separated clusters (mean-driven separation with
moderate factor structure); scenario 2 produces overlapping clusters
whose separation lives almost entirely in the covariance structure:
error variances are large, loadings scale with the error standard
deviations and their columns are cross-correlated, so after
standardization the clusters differ in correlation pattern rather than
location.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch
from .linalg import RandomStream, mvn_loglik_matrix, sample_dirichlet
from .types import Dataset

# Unequal-cluster presets (weights, K, q).
UNEQUAL_CLUSTER_PRESETS = {
    "scenario1": {"weights": np.array([1, 2, 3, 4, 5]) / 15.0, "K": 5, "q": 2},
    "scenario2": {"weights": np.array([1, 19]) / 20.0, "K": 2, "q": 3},
}


@dataclass
class TrueParams:
    """Generating parameters of a synthetic dataset."""

    w: np.ndarray        # (K,)
    mu: np.ndarray       # (K, p)
    lam: np.ndarray      # (K, p, q)
    sigma2: np.ndarray   # (K, p)


def scenario1_error_inverse_variance(K: int, p: int) -> np.ndarray:
    """Inverse error variances 1 / (1 + 20 log(k+1)), constant across
    variables."""
    k = np.arange(1, K + 1)[:, None]
    return np.broadcast_to(1.0 / (1.0 + 20.0 * np.log(k + 1.0)), (K, p)).copy()


def scenario2_error_inverse_variance(K: int, p: int, stream: RandomStream) -> np.ndarray:
    """Inverse error variances 1 / (1 + u_r log(k+1)) with
    u_r ~ Uniform(500, 1000) shared across components."""
    u = stream.gen.uniform(500.0, 1000.0, size=p)
    k = np.arange(1, K + 1)[:, None]
    return 1.0 / (1.0 + u[None, :] * np.log(k + 1.0))


def _prepare_sigma2(s_inv, K, p, same_sigma):
    s_inv = np.asarray(s_inv, dtype=float)
    if s_inv.shape == (p,):
        s_inv = np.broadcast_to(s_inv[None, :], (K, p)).copy()
    if s_inv.shape != (K, p):
        raise ValueError(f"s_inv must be (K, p) = ({K}, {p}), got {s_inv.shape}")
    if np.any(s_inv <= 0):
        raise ValueError("inverse variances must be positive")
    sigma2 = 1.0 / s_inv
    if same_sigma:
        sigma2 = np.broadcast_to(sigma2[0][None, :], (K, p)).copy()
    return sigma2


def _draw_weights(K, weights, stream, concentration=10.0):
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.shape != (K,) or abs(w.sum() - 1.0) > 1e-8 or np.any(w <= 0):
            raise ValueError("weights must be a length-K probability vector")
        return w
    # Symmetric Dirichlet, mean 1/K per component.
    return sample_dirichlet(np.full(K, concentration), stream)


def _draw_data(w, mu, lam, sigma2, n, stream, y_bound=None):
    K, p = mu.shape
    q = lam.shape[2]
    u = stream.gen.random(n)
    z = np.minimum(np.searchsorted(np.cumsum(w), u), K - 1).astype(np.int64)
    if y_bound is None:
        y = stream.gen.standard_normal((n, q))
        eps = stream.gen.standard_normal((n, p))
    else:
        # bounded scores and noise, rescaled to unit variance: cluster
        # covariances equal Lambda Lambda^T + Sigma exactly, but there are
        # no stray observations that would read as extra tiny clusters
        y = _bounded_unit_normal((n, q), y_bound, stream)
        eps = _bounded_unit_normal((n, p), y_bound + 0.5, stream)
    x = mu[z] + np.einsum("npq,nq->np", lam[z], y) + np.sqrt(sigma2[z]) * eps
    return x, z


def _bounded_unit_normal(shape, bound, stream):
    """Truncated standard normal rescaled to variance one."""
    from scipy.stats import norm
    lo = norm.cdf(-bound)
    z = norm.cdf(bound) - lo
    var = 1.0 - 2.0 * bound * norm.pdf(bound) / z
    draw = norm.ppf(lo + z * stream.gen.random(shape))
    return draw / np.sqrt(var)


def sim_scenario1(K: int, p: int, q: int, n: int, s_inv, same_sigma: bool,
                  stream: RandomStream, weights=None, mean_sd: float = 6.0,
                  loading_sd: float = 2.5):
    """Well-separated clusters: weights from a symmetric Dirichlet with
    mean 1/K, means iid N(0, mean_sd^2), loadings iid N(0, loading_sd^2),
    error variances from the supplied inverse variances (rows of s_inv).

    Factor scores and noise are bounded unit-variance draws, so clusters
    stay compact and free of chance outlier pockets while each cluster's
    covariance equals Lambda Lambda^T + Sigma exactly.  Returns (Dataset,
    true allocations, TrueParams); the dataset is raw (unnormalized).
    """
    sigma2 = _prepare_sigma2(s_inv, K, p, same_sigma)
    w = _draw_weights(K, weights, stream)
    mu = mean_sd * stream.gen.standard_normal((K, p))
    lam = loading_sd * stream.gen.standard_normal((K, p, q))
    x, z = _draw_data(w, mu, lam, sigma2, n, stream, y_bound=2.0)
    return Dataset.from_matrix(x), z, TrueParams(w=w, mu=mu, lam=lam, sigma2=sigma2)


def sim_scenario2(K: int, p: int, q: int, n: int, s_inv, same_sigma: bool,
                  stream: RandomStream, weights=None, mean_sd: float = 1.0,
                  loading_profile=None, column_corr: float = 0.4):
    """Overlapping clusters with a denser covariance structure.

    Loadings are drawn per row at the scale of that row's error standard
    deviation, with per-column relative strengths ``loading_profile``
    (default: strong leading factors decaying geometrically, with the
    trailing factor capped at 0.45 so that small samples underestimate
    the factor dimension) and cross-correlated columns.  Means are iid
    N(0, mean_sd^2), negligible next to the error scale: the clusters are
    separated by covariance, not location.
    """
    sigma2 = _prepare_sigma2(s_inv, K, p, same_sigma)
    w = _draw_weights(K, weights, stream)
    mu = mean_sd * stream.gen.standard_normal((K, p))
    if loading_profile is None:
        loading_profile = 2.8 * 0.54 ** np.arange(q)
        if q >= 2:
            loading_profile[-1] = min(loading_profile[-1], 0.45)
    profile = np.asarray(loading_profile, dtype=float)
    if profile.shape != (q,):
        raise ValueError(f"loading_profile must have length q={q}")
    corr = np.full((q, q), column_corr) + (1.0 - column_corr) * np.eye(q)
    mixer = np.linalg.cholesky(corr)
    raw = stream.gen.standard_normal((K, p, q)) @ mixer.T
    lam = np.sqrt(sigma2)[:, :, None] * profile[None, None, :] * raw
    x, z = _draw_data(w, mu, lam, sigma2, n, stream)
    return Dataset.from_matrix(x), z, TrueParams(w=w, mu=mu, lam=lam, sigma2=sigma2)


def map_oracle_clustering(true_params: TrueParams, data: Dataset) -> np.ndarray:
    """Maximum-a-posteriori allocations under the generating parameters;
    ties break toward the lower component index."""
    logits = np.log(true_params.w)[:, None] + mvn_loglik_matrix(
        data.x, true_params.mu, true_params.lam, true_params.sigma2)
    return logits.argmax(axis=0)


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected partition agreement; 1 for identical partitions
    (up to relabeling), about 0 for independent ones."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"label vectors differ in length: {a.shape} vs {b.shape}")
    n = len(a)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ka, kb = ai.max() + 1, bi.max() + 1
    table = np.bincount(ai * kb + bi, minlength=ka * kb).reshape(ka, kb)

    def comb2(v):
        v = np.asarray(v, dtype=float)
        return (v * (v - 1.0) / 2.0).sum()

    sum_cells = comb2(table)
    sum_rows = comb2(table.sum(axis=1))
    sum_cols = comb2(table.sum(axis=0))
    total = n * (n - 1.0) / 2.0
    expected = sum_rows * sum_cols / total
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))
