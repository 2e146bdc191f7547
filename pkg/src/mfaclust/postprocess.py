"""Identified inference from the cold-chain trace: most probable number
of alive components, ECR relabeling against a maximum-likelihood pivot,
single best clustering and posterior summaries.

Raw per-component draws are meaningless under label switching; the
summaries below are computed only from relabeled, sign-invariant
functions (weights, means, covariances Lambda Lambda^T + Sigma and
allocations).  Relabeled loading draws are exposed but remain
non-identified up to joint sign flips of a loading column and the
factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EmptyTrace, NoIterationsAtKMap
from .types import (
    Dataset,
    Parameterization,
    PosteriorTrace,
    QUANTILE_LEVELS,
    sigma_as_kp,
)


def map_alive_count(trace: PosteriorTrace) -> tuple[int, float]:
    """Mode of the alive-component count over retained draws and its
    relative frequency; ties break toward the smaller count."""
    if trace.n_retained == 0:
        raise EmptyTrace("no retained draws")
    counts = trace.alive_counts
    values, freq = np.unique(counts, return_counts=True)
    best = values[freq == freq.max()].min()
    prob = freq[values == best][0] / len(counts)
    return int(best), float(prob)


@dataclass
class RelabeledTrace:
    """Draws restricted to iterations with alive count k_map, relabeled
    onto the pivot's alive labels.

    ``labels`` are raw component indices (0-based) of the pivot's alive
    set; ``source_labels[t]`` is the alive set of filtered draw t and
    ``perm[t][a]`` the destination position assigned to source position
    a, so applying perm[t] to the raw draw reproduces the stored
    relabeled draw.
    """

    model: Parameterization
    q: int
    labels: np.ndarray          # (k_map,)
    pivot: np.ndarray           # (n,) pivot allocations (raw labels)
    iters: np.ndarray           # (T',) indices into the original trace
    source_labels: np.ndarray   # (T', k_map)
    perm: np.ndarray            # (T', k_map)
    z: np.ndarray               # (T', n) relabeled allocations (raw labels)
    w: np.ndarray               # (T', k_map)
    mu: np.ndarray              # (T', k_map, p)
    lam: np.ndarray             # (T', k_map, p, q) or (T', p, q)
    sigma: np.ndarray           # model-shaped, alive components only
    loglik: np.ndarray          # (T',)

    @property
    def k_map(self) -> int:
        return len(self.labels)

    @property
    def n_draws(self) -> int:
        return len(self.iters)

    def sigma_kp(self, t: int) -> np.ndarray:
        """(k_map, p) error variances of relabeled draw t."""
        p = self.mu.shape[2]
        return sigma_as_kp(self.sigma[t], self.model, self.k_map, p)


def _agreement_matrix(z: np.ndarray, src: np.ndarray,
                      pivot_pos: np.ndarray, k: int) -> np.ndarray:
    row = np.searchsorted(src, z)
    return np.bincount(row * k + pivot_pos, minlength=k * k).reshape(k, k)


def ecr_relabel(trace: PosteriorTrace, k_map: int) -> RelabeledTrace:
    """Undo label switching conditional on the most probable alive count.

    The pivot is the allocation vector of the filtered draw with maximum
    observed log-likelihood.  For every filtered draw the permutation of
    its alive labels maximizing agreement with the pivot is found exactly
    as an assignment problem on the k_map x k_map agreement matrix.

    With a single alive component no relabeling is needed; the alive
    component of every draw is mapped to the first component.
    """
    keep = np.flatnonzero(trace.alive_counts == k_map)
    if len(keep) == 0:
        raise NoIterationsAtKMap(f"no retained draw has {k_map} alive components")
    loglik = trace.loglik[keep]
    pivot_iter = keep[int(np.argmax(loglik))]
    pivot_z = trace.z[pivot_iter]

    n = trace.z.shape[1]
    p = trace.mu.shape[2]
    q = trace.q
    T = len(keep)
    shared = trace.model.lambda_shared

    if k_map == 1:
        labels = np.array([0])
        pivot = np.zeros(n, dtype=np.int64)
    else:
        labels = np.flatnonzero(trace.alive[pivot_iter])
        pivot = pivot_z
    pivot_pos = np.searchsorted(labels, pivot) if k_map > 1 else np.zeros(n, dtype=np.int64)

    source_labels = np.zeros((T, k_map), dtype=np.int64)
    perms = np.zeros((T, k_map), dtype=np.int64)
    z_rel = np.zeros((T, n), dtype=np.int64)
    w_rel = np.zeros((T, k_map))
    mu_rel = np.zeros((T, k_map, p))
    lam_rel = np.zeros((T, p, q)) if shared else np.zeros((T, k_map, p, q))
    sig_shape = trace.model.sigma_shape(k_map, p)
    sigma_rel = np.zeros((T,) + sig_shape)

    for t_out, t in enumerate(keep):
        src = np.flatnonzero(trace.alive[t])
        source_labels[t_out] = src
        if k_map == 1:
            perm = np.array([0])
        else:
            agree = _agreement_matrix(trace.z[t], src, pivot_pos, k_map)
            _, perm = linear_sum_assignment(agree, maximize=True)
        perms[t_out] = perm
        lut = np.zeros(trace.kmax, dtype=np.int64)
        lut[src] = labels[perm]
        z_rel[t_out] = lut[trace.z[t]]
        order = src[np.argsort(perm)]
        w_rel[t_out] = trace.w[t][order]
        mu_rel[t_out] = trace.mu[t][order]
        if shared:
            lam_rel[t_out] = trace.lam[t]
        else:
            lam_rel[t_out] = trace.lam[t][order]
        if trace.model.sigma_shared:
            sigma_rel[t_out] = trace.sigma[t]
        else:
            sigma_rel[t_out] = trace.sigma[t][order]

    return RelabeledTrace(model=trace.model, q=q, labels=labels, pivot=pivot,
                          iters=keep, source_labels=source_labels, perm=perms,
                          z=z_rel, w=w_rel, mu=mu_rel, lam=lam_rel,
                          sigma=sigma_rel, loglik=trace.loglik[keep])


def single_best_clustering(rel: RelabeledTrace) -> tuple[np.ndarray, np.ndarray]:
    """Modal relabeled allocation per observation and its relative
    frequency over the filtered draws.  Labels stay raw alive-component
    indices."""
    if rel.n_draws == 0:
        raise EmptyTrace("relabeled trace is empty")
    T, n = rel.z.shape
    pos = np.searchsorted(rel.labels, rel.z)
    counts = np.zeros((n, rel.k_map))
    for a in range(rel.k_map):
        counts[:, a] = (pos == a).sum(axis=0)
    modal = counts.argmax(axis=1)
    prob = counts[np.arange(n), modal] / T
    return rel.labels[modal], prob


@dataclass
class PosteriorSummary:
    """Posterior means and equal-tailed quantiles per alive cluster.

    Covariances are averaged on the covariance scale (the loadings
    themselves are sign-ambiguous).  ``corr_ci_contains_zero`` flags
    correlation entries whose equal-tailed interval straddles zero.
    """

    labels: np.ndarray
    weights_mean: np.ndarray            # (K,)
    weights_quantiles: np.ndarray       # (5, K)
    mu_mean: np.ndarray                 # (K, p)
    mu_quantiles: np.ndarray            # (5, K, p)
    cov_mean: np.ndarray                # (K, p, p)
    cov_quantiles: np.ndarray           # (5, K, p, p)
    corr_mean: np.ndarray               # (K, p, p)
    corr_ci_contains_zero: np.ndarray   # (K, p, p) bool
    quantile_levels: tuple = QUANTILE_LEVELS


def _cov_draws(rel: RelabeledTrace) -> np.ndarray:
    """(T', k_map, p, p) covariance Lambda Lambda^T + Sigma per draw and
    cluster."""
    T = rel.n_draws
    k = rel.k_map
    p = rel.mu.shape[2]
    if rel.model.lambda_shared:
        lam = np.broadcast_to(rel.lam[:, None, :, :], (T, k, p, rel.q))
    else:
        lam = rel.lam
    cov = np.einsum("tkpq,tkrq->tkpr", lam, lam)
    sig = np.stack([rel.sigma_kp(t) for t in range(T)])
    idx = np.arange(p)
    cov[:, :, idx, idx] += sig
    return cov


def summarize(rel: RelabeledTrace, data: Dataset,
              sig_level: float = 0.05) -> PosteriorSummary:
    """Posterior means and {2.5, 25, 50, 75, 97.5}% quantiles of weights,
    cluster means and covariance entries, plus mean correlations with an
    interval-contains-zero flag at the (1 - sig_level) level."""
    if rel.n_draws == 0:
        raise EmptyTrace("relabeled trace is empty")
    levels = np.asarray(QUANTILE_LEVELS)
    cov = _cov_draws(rel)
    sd = np.sqrt(np.einsum("tkpp->tkp", cov))
    corr = cov / (sd[:, :, :, None] * sd[:, :, None, :])
    lo, hi = np.quantile(corr, [sig_level / 2.0, 1.0 - sig_level / 2.0], axis=0)
    return PosteriorSummary(
        labels=rel.labels,
        weights_mean=rel.w.mean(axis=0),
        weights_quantiles=np.quantile(rel.w, levels, axis=0),
        mu_mean=rel.mu.mean(axis=0),
        mu_quantiles=np.quantile(rel.mu, levels, axis=0),
        cov_mean=cov.mean(axis=0),
        cov_quantiles=np.quantile(cov, levels, axis=0),
        corr_mean=corr.mean(axis=0),
        corr_ci_contains_zero=(lo <= 0.0) & (hi >= 0.0),
    )
