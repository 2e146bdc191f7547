"""Core model structures: the eight covariance parameterizations, prior
configuration, datasets, chain state and posterior traces.

Parameterization codes follow the usual three-letter scheme: the first
letter says whether the loading matrices are constrained to be equal
across components (C) or not (U), the second whether the error variances
are shared across components, the third whether the error variance is
isotropic (proportional to the identity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GammaViolatesEmptying, KMaxTooSmall, QTooLarge

# Canonical ordering used for grids and report tables.
PARAMETERIZATIONS = ("UUU", "CUU", "UCU", "CCU", "UCC", "UUC", "CUC", "CCC")

QUANTILE_LEVELS = (0.025, 0.25, 0.5, 0.75, 0.975)


@dataclass(frozen=True)
class Parameterization:
    """One of the eight covariance constraint patterns."""

    lambda_shared: bool
    sigma_shared: bool
    isotropic: bool

    @classmethod
    def from_code(cls, code: str) -> "Parameterization":
        code = code.upper()
        if code not in PARAMETERIZATIONS:
            raise ValueError(f"unknown parameterization code {code!r}")
        return cls(code[0] == "C", code[1] == "C", code[2] == "C")

    @property
    def code(self) -> str:
        return ("C" if self.lambda_shared else "U") + \
               ("C" if self.sigma_shared else "U") + \
               ("C" if self.isotropic else "U")

    def sigma_shape(self, kmax: int, p: int) -> tuple[int, ...]:
        """Storage shape of the error variances.

        Four shapes, one per (shared, isotropic) combination; the
        constraints are therefore unrepresentable rather than merely
        checked.
        """
        if self.sigma_shared and self.isotropic:
            return ()
        if self.sigma_shared:
            return (p,)
        if self.isotropic:
            return (kmax,)
        return (kmax, p)

    def lambda_shape(self, kmax: int, p: int, q: int) -> tuple[int, ...]:
        return (p, q) if self.lambda_shared else (kmax, p, q)


def all_parameterizations() -> tuple[Parameterization, ...]:
    return tuple(Parameterization.from_code(c) for c in PARAMETERIZATIONS)


def ledermann_bound(p: int) -> int:
    """Largest identifiable factor dimension for p observed variables."""
    return int(math.floor((2 * p + 1 - math.sqrt(8 * p + 1)) / 2))


def component_dim(p: int, q: int) -> int:
    """Free parameters of a single factor-analysis component,
    d = 2p + pq - q(q-1)/2 (mean + loadings with the triangular
    constraint + diagonal error variances)."""
    return 2 * p + p * q - q * (q - 1) // 2


def loading_free_entries(p: int, q: int) -> int:
    """Free entries of one p x q loading matrix whose first q x q block is
    lower triangular: pq - q(q-1)/2."""
    return p * q - q * (q - 1) // 2


def free_parameter_count(model: Parameterization | str, K: int, q: int, p: int) -> int:
    """Number of free parameters of a K-component mixture under the given
    parameterization: (K-1) weights + Kp means + loadings + error
    variances.
    """
    if isinstance(model, str):
        model = Parameterization.from_code(model)
    L = loading_free_entries(p, q)
    if not model.lambda_shared:
        L *= K
    if model.sigma_shared and model.isotropic:
        S = 1
    elif model.sigma_shared:
        S = p
    elif model.isotropic:
        S = K
    else:
        S = K * p
    return (K - 1) + K * p + L + S


def loading_mask(p: int, q: int) -> np.ndarray:
    """Boolean (p, q) mask of free loading entries; row r holds
    min(r+1, q) free entries, the rest are structural zeros."""
    rows = np.arange(p)[:, None]
    cols = np.arange(q)[None, :]
    return cols <= rows


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters of the hierarchical prior.

    ``gamma`` is the total Dirichlet mass of the target chain; each
    component receives gamma / kmax.  ``xi`` and ``psi_diag`` default to
    the standardized-data choice (zero mean, unit variance) when left as
    None.
    """

    kmax: int = 20
    gamma: float = 1.0
    xi: np.ndarray | None = None
    psi_diag: np.ndarray | None = None
    alpha_sigma: float = 0.5
    beta_sigma: float = 0.5
    g: float = 0.5
    h: float = 0.5
    delta: float = 1.0
    n_chains: int = 4

    def xi_vector(self, p: int) -> np.ndarray:
        if self.xi is None:
            return np.zeros(p)
        return np.asarray(self.xi, dtype=float)

    def psi_vector(self, p: int) -> np.ndarray:
        if self.psi_diag is None:
            return np.ones(p)
        return np.asarray(self.psi_diag, dtype=float)


def validate_config(model: Parameterization, prior: PriorConfig, q: int, p: int) -> None:
    """Reject configurations outside the identifiable / emptying regime.

    Checks, in order: 1 <= q <= Ledermann bound, kmax >= 2, and
    gamma/kmax < d/2 so that redundant components empty asymptotically.
    """
    bound = ledermann_bound(p)
    if not 1 <= q <= bound:
        raise QTooLarge(
            f"q={q} outside [1, {bound}] (Ledermann bound for p={p})")
    if prior.kmax < 2:
        raise KMaxTooSmall(f"kmax={prior.kmax} < 2")
    d = component_dim(p, q)
    mass = prior.gamma / prior.kmax
    if not mass < d / 2:
        raise GammaViolatesEmptying(
            f"gamma/kmax = {mass} >= d/2 = {d / 2} (p={p}, q={q})")
    if prior.gamma <= 0:
        raise GammaViolatesEmptying("gamma must be positive")
    if prior.n_chains < 1:
        raise KMaxTooSmall("n_chains must be >= 1")


@dataclass
class Dataset:
    """n x p observation matrix plus the column statistics needed to map
    standardized-scale summaries back to the original scale."""

    x: np.ndarray
    col_means: np.ndarray
    col_sds: np.ndarray
    normalized: bool = False
    var_names: tuple[str, ...] | None = None

    @classmethod
    def from_matrix(cls, x, var_names=None) -> "Dataset":
        x = np.asarray(x, dtype=float)
        if x.ndim != 2:
            raise ValueError("data must be a 2-D matrix")
        means = x.mean(axis=0)
        sds = x.std(axis=0, ddof=1)
        return cls(x=x, col_means=means, col_sds=sds,
                   normalized=False, var_names=var_names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def names(self) -> tuple[str, ...]:
        if self.var_names is not None:
            return self.var_names
        return tuple(f"V{j + 1}" for j in range(self.p))

    def validate(self) -> None:
        if self.n < 2 or self.p < 2:
            raise ValueError(f"need n >= 2 and p >= 2, got {self.x.shape}")
        if not np.all(np.isfinite(self.x)):
            raise ValueError("data contains non-finite entries")
        if self.normalized:
            if np.any(self.col_sds <= 0):
                raise ValueError("normalized dataset with non-positive col_sds")
            if np.max(np.abs(self.x.mean(axis=0))) >= 1e-10:
                raise ValueError("normalized dataset has non-zero column means")
            if np.max(np.abs(self.x.var(axis=0, ddof=1) - 1.0)) >= 1e-8:
                raise ValueError("normalized dataset has non-unit column variances")


@dataclass
class ChainState:
    """All latent quantities of one heated chain.

    ``sigma`` is stored in the parameterization's native shape (see
    Parameterization.sigma_shape); ``omega_diag`` holds the prior
    variances of the loading rows; ``dirichlet_mass`` is the
    per-component Dirichlet parameter currently attached to this chain.
    """

    w: np.ndarray
    mu: np.ndarray
    lam: np.ndarray
    sigma: np.ndarray
    y: np.ndarray
    z: np.ndarray
    omega_diag: np.ndarray
    dirichlet_mass: float

    def copy(self) -> "ChainState":
        return ChainState(
            w=self.w.copy(), mu=self.mu.copy(), lam=self.lam.copy(),
            sigma=np.array(self.sigma, copy=True), y=self.y.copy(),
            z=self.z.copy(), omega_diag=self.omega_diag.copy(),
            dirichlet_mass=self.dirichlet_mass)

    def validate(self, model: Parameterization, kmax: int) -> None:
        if abs(self.w.sum() - 1.0) > 1e-8 or np.any(self.w < 0):
            raise ValueError("w is not a probability vector")
        if np.any(np.asarray(self.sigma) <= 0):
            raise ValueError("non-positive error variance")
        if np.any(self.omega_diag <= 0):
            raise ValueError("non-positive loading prior variance")
        if np.any((self.z < 0) | (self.z >= kmax)):
            raise ValueError("allocation outside 1..kmax")
        p, q = self.lam.shape[-2:]
        free = loading_mask(p, q)
        lam = self.lam if self.lam.ndim == 3 else self.lam[None]
        if np.any(lam[:, ~free] != 0.0):
            raise ValueError("loading matrix violates its structural zeros")


def sigma_as_kp(sigma: np.ndarray, model: Parameterization,
                kmax: int, p: int) -> np.ndarray:
    """Read-only (kmax, p) view of the error variances, whatever the
    storage shape."""
    sigma = np.asarray(sigma, dtype=float)
    if model.sigma_shared and model.isotropic:
        return np.broadcast_to(sigma, (kmax, p))
    if model.sigma_shared:
        return np.broadcast_to(sigma[None, :], (kmax, p))
    if model.isotropic:
        return np.broadcast_to(sigma[:, None], (kmax, p))
    return sigma


def lam_as_kpq(lam: np.ndarray, kmax: int) -> np.ndarray:
    """Read-only (kmax, p, q) view of the loadings (shared loadings are
    broadcast)."""
    if lam.ndim == 3:
        return lam
    return np.broadcast_to(lam[None], (kmax,) + lam.shape)


@dataclass
class SuffStats:
    """Per-sweep sufficient statistics of the full conditionals.

    All component sums run over observations allocated to the component;
    empty components yield zero blocks, which makes every conditional
    fall back to its prior.
    """

    n: np.ndarray                # (K,) allocation counts
    A: np.ndarray | None         # (K, p) diagonal posterior precision of the means
    B: np.ndarray | None         # (K, p) matching linear term
    tau: np.ndarray | None       # (K, p, q) loading-row linear terms
    Delta: np.ndarray | None     # (K, p, q, q) loading-row precisions (data part)
    s: np.ndarray | None         # (K, p) residual sums of squares
    T_diag: np.ndarray           # (q,) loading column sums of squares
    M: np.ndarray | None         # (K, q, q) factor posterior precisions

    @property
    def tau_pooled(self) -> np.ndarray:
        return self.tau.sum(axis=0)

    @property
    def Delta_pooled(self) -> np.ndarray:
        return self.Delta.sum(axis=0)

    @property
    def s_by_var(self) -> np.ndarray:
        return self.s.sum(axis=0)

    @property
    def s_by_comp(self) -> np.ndarray:
        return self.s.sum(axis=1)

    @property
    def s_total(self) -> float:
        return float(self.s.sum())


@dataclass
class PosteriorTrace:
    """Retained post-burn-in draws of the cold chain for one model."""

    model: Parameterization
    q: int
    kmax: int
    z: np.ndarray        # (T, n)
    w: np.ndarray        # (T, K)
    mu: np.ndarray       # (T, K, p)
    lam: np.ndarray      # (T, K, p, q) or (T, p, q)
    sigma: np.ndarray    # (T, *sigma_shape)
    alive: np.ndarray    # (T, K) bool
    loglik: np.ndarray   # (T,)

    @property
    def n_retained(self) -> int:
        return self.z.shape[0]

    @property
    def alive_counts(self) -> np.ndarray:
        return self.alive.sum(axis=1)

    def validate(self) -> None:
        t = self.n_retained
        for name in ("w", "mu", "lam", "sigma", "alive", "loglik"):
            if getattr(self, name).shape[0] != t:
                raise ValueError(f"trace field {name} has mismatched length")
        for row in range(t):
            counts = np.bincount(self.z[row], minlength=self.kmax)
            if not np.array_equal(counts > 0, self.alive[row]):
                raise ValueError("alive sets inconsistent with allocations")


@dataclass
class ModelSummary:
    """Selection-relevant digest of one fitted (parameterization, q) cell."""

    code: str
    q: int
    k_map: int | None = None
    k_map_prob: float | None = None
    bic: float | None = None
    max_loglik: float | None = None
    nu: int | None = None
    swap_rate: float | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class FitReport:
    """Everything the report writer needs about a completed grid fit."""

    models: list            # ModelSummary per grid cell, canonical order
    selected: ModelSummary
    alive_labels: np.ndarray   # raw component indices, 1-based
    class_labels: np.ndarray   # (n,) 1-based raw labels
    class_prob: np.ndarray     # (n,)
    weights_mean: np.ndarray
    mu_mean: np.ndarray
    cov_mean: np.ndarray
    summary: object            # postprocess.PosteriorSummary
    relabeled: object          # postprocess.RelabeledTrace
    trace: PosteriorTrace      # raw cold-chain trace of the selected model
    dataset: Dataset
    seed: int | None = None
    config: dict = field(default_factory=dict)
