"""Model choice: observed-data mixture log-likelihood, BIC conditional on
the most probable number of alive components, and the grid minimizer."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .errors import AllModelsFailed, NonFiniteLoglik
from .types import (
    ChainState,
    Dataset,
    ModelSummary,
    Parameterization,
    PosteriorTrace,
    free_parameter_count,
    lam_as_kpq,
    sigma_as_kp,
)
from .linalg import mvn_loglik_matrix


def observed_loglik(w: np.ndarray, mu: np.ndarray, lam: np.ndarray,
                    sigma2: np.ndarray, data: Dataset) -> float:
    """Mixture log-likelihood sum_i log sum_k w_k f(x_i; mu_k, Lam_k
    Lam_k^T + Sigma_k), log-sum-exp stabilized.

    Weights are renormalized, so any subset of components (e.g. the alive
    set of a draw) can be passed directly.
    """
    w = np.asarray(w, dtype=float)
    logw = np.log(w / w.sum())
    logf = mvn_loglik_matrix(data.x, mu, lam, sigma2)
    value = float(logsumexp(logw[:, None] + logf, axis=0).sum())
    if not np.isfinite(value):
        raise NonFiniteLoglik(f"log-likelihood is {value}")
    return value


def observed_loglik_state(state: ChainState, data: Dataset,
                          model: Parameterization) -> float:
    """Mixture log-likelihood of a full chain state (all components,
    weights as they stand)."""
    K = state.w.shape[0]
    sigma2 = sigma_as_kp(state.sigma, model, K, data.p)
    lam = np.ascontiguousarray(lam_as_kpq(state.lam, K))
    return observed_loglik(state.w, state.mu, lam, sigma2, data)


def bic(max_loglik: float, nu: int, n: int) -> float:
    """-2 * max log-likelihood + nu * log n."""
    return -2.0 * max_loglik + nu * np.log(n)


def draw_loglik_restricted(trace: PosteriorTrace, t: int, data: Dataset) -> float:
    """Observed log-likelihood of retained draw t restricted to its alive
    components, weights renormalized over the alive set."""
    alive = np.flatnonzero(trace.alive[t])
    K = trace.kmax
    lam_t = lam_as_kpq(trace.lam[t], K)[alive]
    sigma2 = sigma_as_kp(trace.sigma[t], trace.model, K, data.p)[alive]
    return observed_loglik(trace.w[t][alive], trace.mu[t][alive],
                           np.ascontiguousarray(lam_t), sigma2, data)


def summarize_model(trace: PosteriorTrace, data: Dataset,
                    swap_rate: float | None = None) -> ModelSummary:
    """BIC digest of one fitted model, conditional on its most probable
    alive count: the plug-in likelihood is the maximum restricted
    log-likelihood over the retained draws whose alive count equals
    k_map, and the parameter count uses K = k_map."""
    from .postprocess import map_alive_count

    k_map, prob = map_alive_count(trace)
    keep = np.flatnonzero(trace.alive_counts == k_map)
    best = max(draw_loglik_restricted(trace, int(t), data) for t in keep)
    nu = free_parameter_count(trace.model, k_map, trace.q, data.p)
    return ModelSummary(code=trace.model.code, q=trace.q, k_map=k_map,
                        k_map_prob=prob, bic=float(bic(best, nu, data.n)),
                        max_loglik=best, nu=nu, swap_rate=swap_rate)


def _better(a: ModelSummary, b: ModelSummary) -> ModelSummary:
    """Smaller BIC wins; ties break toward fewer free parameters, then
    lexicographic code."""
    if a.bic != b.bic:
        return a if a.bic < b.bic else b
    if a.nu != b.nu:
        return a if a.nu < b.nu else b
    return a if (a.code, a.q) <= (b.code, b.q) else b


def best_per_code(summaries) -> dict[str, ModelSummary]:
    """For each parameterization, the summary at its BIC-minimizing q."""
    out: dict[str, ModelSummary] = {}
    for s in summaries:
        if s.failed:
            continue
        if s.code not in out:
            out[s.code] = s
        else:
            out[s.code] = _better(out[s.code], s)
    return out


def select_model(summaries) -> ModelSummary:
    """Global BIC minimizer over the grid."""
    per_code = best_per_code(summaries)
    if not per_code:
        raise AllModelsFailed("no model in the grid completed successfully")
    winner = None
    for s in per_code.values():
        winner = s if winner is None else _better(winner, s)
    return winner
