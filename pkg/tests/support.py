"""Shared test oracles: dense linear-algebra references, naive
double-loop statistics, brute-force enumerators and the
joint-distribution (getting-it-right) simulators.

Everything here deliberately avoids the library's fast paths so the
tests compare two independent routes to the same quantity.
"""

import numpy as np

from mfaclust import conditionals as cd
from mfaclust.linalg import RandomStream
from mfaclust.types import (
    Dataset,
    Parameterization,
    lam_as_kpq,
    loading_mask,
    sigma_as_kp,
)


def dense_logpdf(x, mu, lam, sigma2):
    """Gaussian log-density via dense covariance and slogdet."""
    cov = lam @ lam.T + np.diag(sigma2)
    p = len(mu)
    sign, logdet = np.linalg.slogdet(cov)
    assert sign > 0
    v = np.atleast_2d(x) - mu
    sol = np.linalg.solve(cov, v.T).T
    quad = (v * sol).sum(axis=1)
    out = -0.5 * (p * np.log(2 * np.pi) + logdet + quad)
    return out if np.ndim(x) > 1 else float(out[0])


def naive_suffstats(state, data, model, prior):
    """Every sufficient statistic recomputed with explicit loops."""
    x, y, z = data.x, state.y, state.z
    n, p = x.shape
    q = y.shape[1]
    K = state.w.shape[0]
    sig = np.array(sigma_as_kp(state.sigma, model, K, p))
    lam = np.array(lam_as_kpq(state.lam, K))
    psi = prior.psi_vector(p)
    xi = prior.xi_vector(p)

    counts = np.zeros(K, dtype=int)
    for i in range(n):
        counts[z[i]] += 1

    A = np.zeros((K, p))
    B = np.zeros((K, p))
    tau = np.zeros((K, p, q))
    Delta = np.zeros((K, p, q, q))
    s = np.zeros((K, p))
    for k in range(K):
        A[k] = counts[k] / sig[k] + 1.0 / psi
        acc = np.zeros(p)
        for i in range(n):
            if z[i] == k:
                acc += x[i] - lam[k] @ y[i]
        B[k] = acc / sig[k] + xi / psi
        for r in range(p):
            for i in range(n):
                if z[i] == k:
                    tau[k, r] += (x[i, r] - state.mu[k, r]) * y[i]
                    Delta[k, r] += np.outer(y[i], y[i])
                    s[k, r] += (x[i, r] - state.mu[k, r] - lam[k, r] @ y[i]) ** 2
            tau[k, r] /= sig[k, r]
            Delta[k, r] /= sig[k, r]

    T = np.zeros((q, q))
    for k in range(K):
        for r in range(p):
            T += np.outer(lam[k, r], lam[k, r])
    M = np.zeros((K, q, q))
    for k in range(K):
        M[k] = np.eye(q) + lam[k].T @ np.diag(1.0 / sig[k]) @ lam[k]
    return counts, A, B, tau, Delta, s, np.diag(T), M


def enumerate_free_parameters(code, K, q, p):
    """Count free scalars by literally enumerating parameter cells under
    the constraint pattern."""
    model = Parameterization.from_code(code)
    cells = set()
    for k in range(K - 1):
        cells.add(("w", k))
    for k in range(K):
        for r in range(p):
            cells.add(("mu", k, r))
    mask = loading_mask(p, q)
    for k in range(1 if model.lambda_shared else K):
        for r in range(p):
            for j in range(q):
                if mask[r, j]:
                    cells.add(("lam", k, r, j))
    ks = 1 if model.sigma_shared else K
    rs = 1 if model.isotropic else p
    for k in range(ks):
        for r in range(rs):
            cells.add(("sig", k, r))
    return len(cells)


def brute_force_best_permutation(z, pivot, labels_from, labels_to):
    """Best relabeling by exhaustive search over all permutations."""
    from itertools import permutations

    best, best_perm = -1, None
    for perm in permutations(range(len(labels_to))):
        lut = {a: labels_to[perm[i]] for i, a in enumerate(labels_from)}
        agree = sum(1 for zi, pi in zip(z, pivot) if lut[zi] == pi)
        if agree > best:
            best, best_perm = agree, perm
    return np.array(best_perm), best


def ari_pair_counting(a, b):
    """Adjusted Rand index from explicit pair counts (quadratic loop)."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    n = len(a)
    n11 = n00 = n10 = n01 = 0
    for i in range(n):
        for j in range(i + 1, n):
            same_a = a[i] == a[j]
            same_b = b[i] == b[j]
            if same_a and same_b:
                n11 += 1
            elif same_a:
                n10 += 1
            elif same_b:
                n01 += 1
            else:
                n00 += 1
    num = 2.0 * (n11 * n00 - n10 * n01)
    den = (n11 + n10) * (n10 + n00) + (n11 + n01) * (n01 + n00)
    return 1.0 if den == 0 else num / den


def make_trace(z_draws, kmax, model, q, p, logliks=None, params=None, seed=0):
    """PosteriorTrace built from allocation draws; parameters are either
    supplied per draw or filled with seeded random values of the right
    shapes."""
    from mfaclust.types import PosteriorTrace

    z_draws = np.asarray(z_draws, dtype=np.int64)
    T, n = z_draws.shape
    rng = np.random.default_rng(seed)
    alive = np.zeros((T, kmax), dtype=bool)
    for t in range(T):
        alive[t] = np.bincount(z_draws[t], minlength=kmax) > 0
    if params is None:
        w = rng.dirichlet(np.ones(kmax), size=T)
        mu = rng.standard_normal((T, kmax, p))
        lam = rng.standard_normal((T,) + model.lambda_shape(kmax, p, q))
        sigma = rng.uniform(0.5, 2.0, (T,) + model.sigma_shape(kmax, p))
    else:
        w, mu, lam, sigma = params
    if logliks is None:
        logliks = rng.standard_normal(T)
    return PosteriorTrace(model=model, q=q, kmax=kmax, z=z_draws, w=w, mu=mu,
                          lam=lam, sigma=sigma, alive=alive,
                          loglik=np.asarray(logliks, dtype=float))


def make_state(model, q, prior, n, p, seed=0, mass=None):
    stream = RandomStream(seed, 77)
    if mass is None:
        mass = prior.gamma / prior.kmax
    return cd.draw_prior_state(model, q, prior, n, p, mass, stream)


def make_dataset(x):
    x = np.asarray(x, dtype=float)
    return Dataset(x=x, col_means=x.mean(axis=0), col_sds=x.std(axis=0, ddof=1))


# -- getting-it-right simulators --------------------------------------------

def geweke_monitors(state, model, kmax):
    sig = sigma_as_kp(state.sigma, model, kmax, state.mu.shape[1])
    lam = lam_as_kpq(state.lam, kmax)
    return np.array([state.w[0], state.mu[0, 0], 1.0 / sig[0, 0], lam[0, 1, 0]])


def geweke_marginal_conditional(model, q, prior, n, p, iters, stream):
    """Independent draws of the monitored scalars under the prior."""
    mass = prior.gamma / prior.kmax
    out = np.empty((iters, 4))
    for t in range(iters):
        st = cd.draw_prior_state(model, q, prior, n, p, mass, stream)
        out[t] = geweke_monitors(st, model, prior.kmax)
    return out


def geweke_successive_conditional(model, q, prior, n, p, iters, stream):
    """Draws of the monitored scalars from the chain that alternates one
    full Gibbs sweep with re-simulation of the data given the state."""
    mass = prior.gamma / prior.kmax
    st = cd.draw_prior_state(model, q, prior, n, p, mass, stream)
    x = cd.simulate_observations(st, model, n, p, stream)
    out = np.empty((iters, 4))
    for t in range(iters):
        data = Dataset(x=x, col_means=np.zeros(p), col_sds=np.ones(p))
        cd.gibbs_sweep(st, data, model, prior, stream)
        x = cd.simulate_observations(st, model, n, p, stream)
        out[t] = geweke_monitors(st, model, prior.kmax)
    return out


def batch_means_se(chain, n_batches=100):
    """Monte Carlo standard error of a correlated chain via batch means."""
    m = len(chain) // n_batches
    means = chain[: m * n_batches].reshape(n_batches, m).mean(axis=1)
    return means.std(ddof=1) / np.sqrt(n_batches)


def geweke_compare(mc, sc, n_batches=100):
    """Worst |z| over first and second moments of every monitor."""
    worst = 0.0
    for j in range(mc.shape[1]):
        for moment in (1, 2):
            a = mc[:, j] ** moment
            b = sc[:, j] ** moment
            se = np.hypot(a.std(ddof=1) / np.sqrt(len(a)),
                          batch_means_se(b, n_batches))
            worst = max(worst, abs((a.mean() - b.mean()) / se))
    return worst
