"""Numerically safe primitives: low-rank covariance inversion, normal and
Dirichlet/Gamma sampling, all fed by explicit seeded streams.

Covariances of the form Lambda Lambda^T + Sigma (p x q loadings, diagonal
Sigma) are never inverted densely; every solve goes through the q x q
matrix M = I + Lambda^T Sigma^-1 Lambda.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import gammaln

from .errors import (
    CholeskyFailure,
    NonFiniteInput,
    NonPositiveAlpha,
    NonPositiveParam,
)

LOG_2PI = float(np.log(2.0 * np.pi))

# Floor applied to error variances before building a LowRankCov; protects
# density evaluation when a component momentarily collapses.
SIGMA_FLOOR = 1e-12

# Floor applied to simplex draws so that log-densities stay finite.
WEIGHT_FLOOR = 1e-300


class RandomStream:
    """Seeded random source with reproducible substreams.

    Identical (seed, stream_id, call sequence) reproduces identical draws
    bit for bit.  ``substream(i)`` derives an independent child stream;
    children are identified by the path of indices from the root, so the
    assignment of streams to work units never depends on scheduling.
    """

    def __init__(self, seed: int, stream_id: int = 0, _key: tuple[int, ...] | None = None):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._key = (self.stream_id,) if _key is None else _key
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self._key)))

    @property
    def gen(self) -> np.random.Generator:
        return self._gen

    def substream(self, index: int) -> "RandomStream":
        return RandomStream(self.seed, self.stream_id, _key=self._key + (int(index),))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, key={self._key})"


def sample_gamma(shape, rate, stream: RandomStream, size=None) -> np.ndarray | float:
    """Gamma draw parameterized by shape and rate (mean shape/rate).

    Valid for shape < 1; output is strictly positive.
    """
    shape_arr = np.asarray(shape, dtype=float)
    rate_arr = np.asarray(rate, dtype=float)
    if np.any(shape_arr <= 0) or np.any(rate_arr <= 0):
        raise NonPositiveParam(f"gamma shape/rate must be positive, got {shape}, {rate}")
    draw = stream.gen.gamma(shape_arr, 1.0 / rate_arr, size=size)
    draw = np.maximum(draw, 1e-300)
    if np.ndim(draw) == 0 and size is None and np.ndim(shape) == 0 and np.ndim(rate) == 0:
        return float(draw)
    return draw


def sample_dirichlet(alpha, stream: RandomStream) -> np.ndarray:
    """Dirichlet draw via normalized Gammas.

    Handles very small parameters (the gamma/K << 1 regime) without
    underflowing any coordinate to exact zero: raw gammas are clamped at
    1e-300 before normalization.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0) or not np.all(np.isfinite(alpha)):
        raise NonPositiveAlpha(f"Dirichlet parameters must be positive, got {alpha}")
    raw = stream.gen.gamma(alpha, 1.0)
    raw = np.maximum(raw, WEIGHT_FLOOR)
    return raw / raw.sum()


def dirichlet_logpdf(w: np.ndarray, alpha: np.ndarray) -> float:
    """Log-density of a Dirichlet distribution at w (w clamped away from 0)."""
    w = np.maximum(np.asarray(w, dtype=float), WEIGHT_FLOOR)
    alpha = np.asarray(alpha, dtype=float)
    return float(((alpha - 1.0) * np.log(w)).sum()
                 + gammaln(alpha.sum()) - gammaln(alpha).sum())


def sample_mvn(mu, mat, stream: RandomStream, precision: bool = False) -> np.ndarray:
    """Multivariate normal draw with the given covariance, or with the
    given precision (``precision=True``), so conditional draws can use the
    precision directly without a dense inversion."""
    mu = np.asarray(mu, dtype=float)
    mat = np.asarray(mat, dtype=float)
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(mat))):
        raise NonFiniteInput("non-finite mean or scale matrix")
    try:
        L = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure(f"matrix is not positive definite: {exc}") from exc
    noise = stream.gen.standard_normal(mu.shape[-1])
    if precision:
        # mat = L L^T is the precision; L^-T noise has covariance mat^-1.
        return mu + solve_triangular(L, noise, lower=True, trans="T")
    return mu + L @ noise


class LowRankCov:
    """Covariance Lambda Lambda^T + Sigma with cached q x q workhorse
    M = I + Lambda^T Sigma^-1 Lambda, its Cholesky factor and the
    log-determinant of the full matrix (matrix determinant lemma)."""

    __slots__ = ("sigma_diag", "lam", "sigma_inv", "m", "chol_m", "logdet_m", "logdet")

    def __init__(self, sigma_diag: np.ndarray, lam: np.ndarray):
        sigma_diag = np.asarray(sigma_diag, dtype=float)
        lam = np.asarray(lam, dtype=float)
        if not (np.all(np.isfinite(sigma_diag)) and np.all(np.isfinite(lam))):
            raise NonFiniteInput("non-finite covariance factors")
        self.sigma_diag = np.maximum(sigma_diag, SIGMA_FLOOR)
        self.lam = lam
        self.sigma_inv = 1.0 / self.sigma_diag
        q = lam.shape[1]
        self.m = np.eye(q) + (lam * self.sigma_inv[:, None]).T @ lam
        try:
            self.chol_m = np.linalg.cholesky(self.m)
        except np.linalg.LinAlgError as exc:
            raise CholeskyFailure(f"M not positive definite: {exc}") from exc
        self.logdet_m = 2.0 * float(np.log(np.diag(self.chol_m)).sum())
        self.logdet = self.logdet_m + float(np.log(self.sigma_diag).sum())

    @property
    def p(self) -> int:
        return self.lam.shape[0]

    def dense(self) -> np.ndarray:
        """Materialize the p x p covariance (tests and small p only)."""
        return self.lam @ self.lam.T + np.diag(self.sigma_diag)


def woodbury_inverse_apply(cov: LowRankCov, v: np.ndarray) -> np.ndarray:
    """(Lambda Lambda^T + Sigma)^-1 v in O(p q^2), for a single vector or a
    stack of rows."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("non-finite input vector")
    u = v * cov.sigma_inv
    t = u @ cov.lam
    s = cho_solve((cov.chol_m, True), np.atleast_2d(t).T).T.reshape(t.shape)
    return u - (s @ cov.lam.T) * cov.sigma_inv


def mvn_logpdf_lowrank(x: np.ndarray, mu: np.ndarray, cov: LowRankCov) -> np.ndarray | float:
    """Gaussian log-density with low-rank-plus-diagonal covariance, for a
    single point or a stack of rows."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(mu))):
        raise NonFiniteInput("non-finite density arguments")
    v = x - mu
    u = v * cov.sigma_inv
    q1 = (v * u).sum(axis=-1)
    t = u @ cov.lam
    s = cho_solve((cov.chol_m, True), np.atleast_2d(t).T).T.reshape(t.shape)
    q2 = (t * s).sum(axis=-1)
    out = -0.5 * (cov.p * LOG_2PI + cov.logdet + q1 - q2)
    return float(out) if out.ndim == 0 else out


class ComponentOps:
    """Batched per-component factor algebra shared by the allocation and
    factor updates: M = I + Lambda^T Sigma^-1 Lambda per component, its
    Cholesky factor, inverse, and log-determinants."""

    __slots__ = ("sigma2", "sig_inv", "slam", "m", "minv", "linv_t", "logdet")

    def __init__(self, lam: np.ndarray, sigma2: np.ndarray):
        # lam: (K, p, q); sigma2: (K, p)
        q = lam.shape[-1]
        self.sigma2 = np.maximum(sigma2, SIGMA_FLOOR)
        self.sig_inv = 1.0 / self.sigma2
        self.slam = lam * self.sig_inv[:, :, None]
        self.m = np.eye(q) + lam.transpose(0, 2, 1) @ self.slam
        try:
            chol = np.linalg.cholesky(self.m)
        except np.linalg.LinAlgError as exc:
            raise CholeskyFailure(f"M not positive definite: {exc}") from exc
        logdet_m = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
        self.logdet = logdet_m + np.log(self.sigma2).sum(axis=1)   # (K,)
        self.minv = np.linalg.inv(self.m)
        self.linv_t = np.linalg.inv(chol).transpose(0, 2, 1)       # L^-T


def mvn_loglik_matrix(x: np.ndarray, mu: np.ndarray, lam: np.ndarray,
                      sigma2: np.ndarray, ops: ComponentOps | None = None) -> np.ndarray:
    """Log-densities of every observation under every component.

    x: (n, p); mu: (K, p); lam: (K, p, q); sigma2: (K, p).  Returns
    (K, n).  This is the hot path of the allocation update and the
    mixture log-likelihood; the quadratic forms are arranged as plain
    matrix products over all components at once.
    """
    n, p = x.shape
    K, _, q = lam.shape
    if ops is None:
        ops = ComponentOps(lam, sigma2)
    sig_inv = ops.sig_inv
    # (x - mu_k)^T D_k (x - mu_k) expanded so no (K, n, p) array is formed.
    dm = sig_inv * mu                                           # (K, p)
    q1 = (x * x) @ sig_inv.T - 2.0 * (x @ dm.T) + (mu * dm).sum(axis=1)[None, :]
    t = (x @ ops.slam.transpose(1, 0, 2).reshape(p, K * q)).reshape(n, K, q)
    t -= np.einsum("kp,kpq->kq", mu, ops.slam)[None, :, :]
    tk = t.transpose(1, 0, 2)                                   # (K, n, q)
    q2 = ((tk @ ops.minv) * tk).sum(axis=-1)                    # (K, n)
    quad = q1.T - q2
    return -0.5 * (p * LOG_2PI + ops.logdet[:, None] + quad)
