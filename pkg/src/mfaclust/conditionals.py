"""Full-conditional Gibbs updates for the mixture of factor analyzers,
dispatching on the covariance parameterization.

All conditionals are conjugate.  Empty components automatically fall
back to their priors (their sufficient statistics are zero blocks); they
are never deleted, since emptiness is the inference signal for the
number of clusters.
"""

from __future__ import annotations

import numpy as np

from .errors import AllWeightsZero, CholeskyFailure
from .linalg import (
    ComponentOps,
    RandomStream,
    mvn_loglik_matrix,
    sample_dirichlet,
    sample_gamma,
)
from .types import (
    ChainState,
    Dataset,
    Parameterization,
    PriorConfig,
    SuffStats,
    lam_as_kpq,
    loading_mask,
    sigma_as_kp,
)

# Selectable groups of sufficient statistics; None computes everything.
SUFF_MEANS = frozenset({"means"})
SUFF_LOADINGS = frozenset({"loadings"})
SUFF_RESIDUALS = frozenset({"residuals"})


def compute_suffstats(state: ChainState, data: Dataset, model: Parameterization,
                      prior: PriorConfig, parts: frozenset | None = None) -> SuffStats:
    """Sufficient statistics of the full conditionals, computed from the
    state as it currently stands.

    All component sums run over observations i with z_i = k; pooled forms
    for the constrained updates are exposed as properties on the result.
    ``parts`` restricts the computation to the named groups ("means" for
    A/B, "loadings" for tau/Delta, "residuals" for s); counts and the
    loading column sums of squares are always present, the factor
    precisions M only on a full computation.
    """
    x, y, z = data.x, state.y, state.z
    n, p = x.shape
    q = y.shape[1]
    K = state.w.shape[0]
    want = {"means", "loadings", "residuals", "factor_precision"} \
        if parts is None else set(parts)
    sig_kp = sigma_as_kp(state.sigma, model, K, p)
    lam_k = lam_as_kpq(state.lam, K)

    counts = np.bincount(z, minlength=K)
    A = B = tau = Delta = s = M = None

    need_onehot = want & {"means", "loadings", "residuals"}
    if need_onehot:
        onehot = np.zeros((n, K))
        onehot[np.arange(n), z] = 1.0
    if want & {"means", "loadings"}:
        sum_y = onehot.T @ y                                   # (K, q)

    if "means" in want:
        sum_x = onehot.T @ x                                   # (K, p)
        psi = prior.psi_vector(p)
        xi = prior.xi_vector(p)
        A = counts[:, None] / sig_kp + 1.0 / psi
        B = (sum_x - np.einsum("kpq,kq->kp", lam_k, sum_y)) / sig_kp + xi / psi

    if "loadings" in want:
        yy = (y[:, :, None] * y[:, None, :]).reshape(n, q * q)
        gram_y = (onehot.T @ yy).reshape(K, q, q)
        yh = (onehot[:, :, None] * y[:, None, :]).reshape(n, K * q)
        cross = (yh.T @ x).reshape(K, q, p).transpose(0, 2, 1)  # (K, p, q)
        tau = (cross - state.mu[:, :, None] * sum_y[:, None, :]) / sig_kp[:, :, None]
        Delta = gram_y[:, None, :, :] / sig_kp[:, :, None, None]

    if "residuals" in want:
        if state.lam.ndim == 3:
            fitted = (state.lam[z] @ y[:, :, None])[:, :, 0]
        else:
            fitted = y @ state.lam.T
        resid = x - state.mu[z] - fitted
        s = onehot.T @ (resid * resid)                          # (K, p)

    if state.lam.ndim == 2:
        T_diag = K * (state.lam ** 2).sum(axis=0)
    else:
        T_diag = (state.lam ** 2).sum(axis=(0, 1))

    if "factor_precision" in want:
        slam = lam_k / sig_kp[:, :, None]
        M = np.eye(q) + lam_k.transpose(0, 2, 1) @ slam

    return SuffStats(n=counts, A=A, B=B, tau=tau, Delta=Delta, s=s,
                     T_diag=T_diag, M=M)


def update_omega(state: ChainState, suff: SuffStats, prior: PriorConfig,
                 model: Parameterization, stream: RandomStream) -> np.ndarray:
    """New loading-row prior variances (diagonal of Omega).

    Unconstrained loadings contribute K*p rows to the Gamma shape; shared
    loadings contribute p rows, and the column sum of squares is divided
    by K because T accumulates the shared matrix K times.
    """
    K = state.w.shape[0]
    p = state.mu.shape[1]
    if model.lambda_shared:
        shape = prior.g + p / 2.0
        rate = prior.h + suff.T_diag / (2.0 * K)
    else:
        shape = prior.g + K * p / 2.0
        rate = prior.h + suff.T_diag / 2.0
    return 1.0 / sample_gamma(shape, rate, stream, size=suff.T_diag.shape)


def _draw_loading_rows(tau, Delta, omega_inv, q, stream):
    """Row-wise normal draws of the free loading entries.

    tau: (..., p, q), Delta: (..., p, q, q).  Rows are processed in
    groups of equal free length nu = min(row, q); within a group the
    posterior covariances are inverted and factored in one batched call.
    Returns (..., p, q) with the structural zeros exactly zero.
    """
    lead = tau.shape[:-2]
    p = tau.shape[-2]
    out = np.zeros(lead + (p, q))
    try:
        for nu in range(1, q + 1):
            rows = [nu - 1] if nu < q else list(range(q - 1, p))
            prec = Delta[..., rows, :nu, :nu] + np.diag(omega_inv[:nu])
            cov = np.linalg.inv(prec)
            mean = cov @ tau[..., rows, :nu, None]
            chol = np.linalg.cholesky(cov)
            noise = stream.gen.standard_normal(mean.shape)
            out[..., rows, :nu] = (mean + chol @ noise)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure(
            f"loading-row posterior not positive definite: {exc}") from exc
    return out


def update_lambda(state: ChainState, data: Dataset, suff: SuffStats,
                  prior: PriorConfig, model: Parameterization,
                  stream: RandomStream) -> np.ndarray:
    """New factor loadings.

    Row r has min(r, q) free entries; the entries above the diagonal of
    the first q x q block are never sampled.  Shared loadings pool the
    per-component statistics over k.
    """
    q = state.omega_diag.shape[0]
    omega_inv = 1.0 / state.omega_diag
    if model.lambda_shared:
        return _draw_loading_rows(suff.tau_pooled, suff.Delta_pooled,
                                  omega_inv, q, stream)
    return _draw_loading_rows(suff.tau, suff.Delta, omega_inv, q, stream)


def update_mu(state: ChainState, data: Dataset, suff: SuffStats,
              prior: PriorConfig, stream: RandomStream) -> np.ndarray:
    """New component means; the posterior precision A is diagonal, so the
    draw is coordinatewise."""
    mean = suff.B / suff.A
    sd = 1.0 / np.sqrt(suff.A)
    return mean + sd * stream.gen.standard_normal(mean.shape)


def _ops(state: ChainState, model: Parameterization, p: int) -> ComponentOps:
    K = state.w.shape[0]
    sig_kp = sigma_as_kp(state.sigma, model, K, p)
    lam_k = np.ascontiguousarray(lam_as_kpq(state.lam, K))
    return ComponentOps(lam_k, sig_kp)


def allocation_log_probs(state: ChainState, data: Dataset,
                         model: Parameterization,
                         ops: ComponentOps | None = None) -> np.ndarray:
    """Unnormalized log allocation probabilities, (n, K): log w_k plus the
    marginal Gaussian log-density of each observation under component k
    (factors integrated out, Woodbury path)."""
    if ops is None:
        ops = _ops(state, model, data.p)
    logf = mvn_loglik_matrix(data.x, state.mu, lam_as_kpq(state.lam, state.w.shape[0]),
                             ops.sigma2, ops=ops)
    logw = np.log(np.maximum(state.w, 1e-300))
    return (logw[:, None] + logf).T


def update_z(state: ChainState, data: Dataset, model: Parameterization,
             stream: RandomStream, ops: ComponentOps | None = None) -> np.ndarray:
    """New allocations, drawn independently per observation from the
    normalized component probabilities computed in log space with
    max-subtraction."""
    logits = allocation_log_probs(state, data, model, ops=ops)
    shifted = logits - logits.max(axis=1, keepdims=True)
    probs = np.exp(shifted)
    totals = probs.sum(axis=1)
    if not np.all(np.isfinite(totals)) or np.any(totals <= 0):
        raise AllWeightsZero("allocation probabilities underflowed to zero")
    cdf = np.cumsum(probs, axis=1)
    u = stream.gen.random(data.n) * totals
    znew = (cdf < u[:, None]).sum(axis=1)
    return np.minimum(znew, state.w.shape[0] - 1).astype(np.int64)


def update_w(state: ChainState, stream: RandomStream) -> np.ndarray:
    """New mixing proportions from the Dirichlet conditional with this
    chain's per-component mass plus the allocation counts."""
    counts = np.bincount(state.z, minlength=state.w.shape[0])
    return sample_dirichlet(state.dirichlet_mass + counts, stream)


def update_sigma(state: ChainState, data: Dataset, suff: SuffStats,
                 prior: PriorConfig, model: Parameterization,
                 stream: RandomStream) -> np.ndarray:
    """New error variances in the parameterization's native shape.

    The Gamma draw is on the precisions: per (component, variable) when
    unconstrained, per variable when shared, per component when
    isotropic, and a single scalar when both constraints hold.
    """
    a, b = prior.alpha_sigma, prior.beta_sigma
    n = data.n
    p = data.p
    if not model.sigma_shared and not model.isotropic:
        shape = a + suff.n[:, None] / 2.0
        rate = b + suff.s / 2.0
        draw = sample_gamma(np.broadcast_to(shape, rate.shape), rate, stream,
                            size=rate.shape)
    elif model.sigma_shared and not model.isotropic:
        draw = sample_gamma(a + n / 2.0, b + suff.s_by_var / 2.0, stream,
                            size=(p,))
    elif not model.sigma_shared and model.isotropic:
        draw = sample_gamma(a + suff.n * p / 2.0, b + suff.s_by_comp / 2.0,
                            stream, size=suff.n.shape)
    else:
        draw = sample_gamma(a + n * p / 2.0, b + suff.s_total / 2.0, stream)
        return np.asarray(1.0 / draw)
    return 1.0 / draw


def update_y(state: ChainState, data: Dataset, model: Parameterization,
             stream: RandomStream, ops: ComponentOps | None = None) -> np.ndarray:
    """New latent factors, one q-dimensional draw per observation using
    its component's posterior precision M."""
    if ops is None:
        ops = _ops(state, model, data.p)
    z = state.z
    q = state.omega_diag.shape[0]
    v = data.x - state.mu[z]
    rhs = (v[:, None, :] @ ops.slam[z])[:, 0, :]               # (n, q)
    mean = (rhs[:, None, :] @ ops.minv[z])[:, 0, :]
    noise = stream.gen.standard_normal((data.n, q))
    # L^-T noise has covariance M^-1.
    extra = (ops.linv_t[z] @ noise[:, :, None])[:, :, 0]
    return mean + extra


def gibbs_sweep(state: ChainState, data: Dataset, model: Parameterization,
                prior: PriorConfig, stream: RandomStream) -> None:
    """One full Gibbs cycle, in place.

    Update order: Omega, Lambda, mu, z, w, y, Sigma.  The allocation
    update integrates the factors out, so the factors must be refreshed
    before anything else conditions on them; the error-variance update
    conditions on the factors and therefore runs after the factor
    update.  (With the variance update squeezed between the allocation
    and factor draws the sweep would not leave the posterior invariant.)
    """
    suff = compute_suffstats(state, data, model, prior, parts=SUFF_LOADINGS)
    state.omega_diag = update_omega(state, suff, prior, model, stream)
    state.lam = update_lambda(state, data, suff, prior, model, stream)

    suff = compute_suffstats(state, data, model, prior, parts=SUFF_MEANS)
    state.mu = update_mu(state, data, suff, prior, stream)
    ops = _ops(state, model, data.p)   # one M per (Lambda, Sigma_k) pair
    state.z = update_z(state, data, model, stream, ops=ops)
    state.w = update_w(state, stream)
    state.y = update_y(state, data, model, stream, ops=ops)

    suff = compute_suffstats(state, data, model, prior, parts=SUFF_RESIDUALS)
    state.sigma = update_sigma(state, data, suff, prior, model, stream)


def draw_prior_state(model: Parameterization, q: int, prior: PriorConfig,
                     n: int, p: int, mass: float, stream: RandomStream) -> ChainState:
    """Fully random state drawn from the hierarchical prior, with the
    given per-component Dirichlet mass."""
    K = prior.kmax
    omega = 1.0 / sample_gamma(prior.g, prior.h, stream, size=(q,))
    lam_shape = model.lambda_shape(K, p, q)
    lam = stream.gen.standard_normal(lam_shape) * np.sqrt(omega)
    lam[..., ~loading_mask(p, q)] = 0.0
    xi = prior.xi_vector(p)
    psi = prior.psi_vector(p)
    mu = xi + np.sqrt(psi) * stream.gen.standard_normal((K, p))
    sig_shape = model.sigma_shape(K, p)
    sigma = 1.0 / sample_gamma(prior.alpha_sigma, prior.beta_sigma, stream,
                               size=sig_shape if sig_shape else None)
    w = sample_dirichlet(np.full(K, mass), stream)
    u = stream.gen.random(n)
    z = np.minimum(np.searchsorted(np.cumsum(w), u), K - 1).astype(np.int64)
    y = stream.gen.standard_normal((n, q))
    return ChainState(w=w, mu=mu, lam=lam, sigma=np.asarray(sigma), y=y, z=z,
                      omega_diag=omega, dirichlet_mass=mass)


def simulate_observations(state: ChainState, model: Parameterization,
                          n: int, p: int, stream: RandomStream) -> np.ndarray:
    """Data drawn from the model given the current latents: per
    observation, its component's mean plus loadings times factors plus
    diagonal Gaussian noise."""
    K = state.w.shape[0]
    sig_kp = sigma_as_kp(state.sigma, model, K, p)
    lam_k = lam_as_kpq(state.lam, K)
    z = state.z
    signal = state.mu[z] + np.einsum("npq,nq->np", lam_k[z], state.y)
    return signal + np.sqrt(sig_kp[z]) * stream.gen.standard_normal((n, p))
