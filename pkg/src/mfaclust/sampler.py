"""Orchestration of one model fit: overfitting initialization, tempered
chain ladder, cycle/swap loop, cold-chain trace retention, and the
(parameterization x factor-dimension) grid driver.

Heated chains share the likelihood and differ only in the Dirichlet
prior mass of the mixing proportions; adjacent chains swap states by a
Metropolis step on the prior ratio.
"""

from __future__ import annotations

import multiprocessing
import warnings
from dataclasses import dataclass

import numpy as np

from . import selection
from .conditionals import draw_prior_state, gibbs_sweep
from .linalg import RandomStream, dirichlet_logpdf
from .types import (
    ChainState,
    Dataset,
    Parameterization,
    PosteriorTrace,
    PriorConfig,
    component_dim,
    validate_config,
)


@dataclass(frozen=True)
class TemperingLadder:
    """Increasing Dirichlet masses of the heated chains.

    ``gammas[j]`` is the total mass of chain j; each component of chain j
    receives gammas[j] / kmax.  Chain 0 is the target posterior.
    """

    gammas: np.ndarray
    kmax: int

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=float)
        if g.ndim != 1 or len(g) < 1:
            raise ValueError("ladder needs at least one chain")
        if np.any(g <= 0) or (len(g) > 1 and np.any(np.diff(g) <= 0)):
            raise ValueError("ladder masses must be positive and strictly increasing")
        object.__setattr__(self, "gammas", g)

    @classmethod
    def from_prior(cls, prior: PriorConfig) -> "TemperingLadder":
        gammas = prior.gamma + prior.delta * np.arange(prior.n_chains)
        return cls(gammas=gammas, kmax=prior.kmax)

    @classmethod
    def from_masses(cls, masses, kmax: int) -> "TemperingLadder":
        """Ladder from explicit per-component masses (the dirPriorAlphas
        override): gammas are masses * kmax."""
        return cls(gammas=np.asarray(masses, dtype=float) * kmax, kmax=kmax)

    @property
    def n_chains(self) -> int:
        return len(self.gammas)

    def mass(self, j: int) -> float:
        return float(self.gammas[j] / self.kmax)

    @property
    def masses(self) -> np.ndarray:
        return self.gammas / self.kmax


def overfit_gammas(d: int, n_chains: int) -> np.ndarray:
    """Inflated per-component Dirichlet masses used during the
    overfitting initialization: d/2 + (j-1) d / (2(J-1)), and just d/2
    for a single chain.  At or above d/2 the redundant components keep
    non-negligible posterior weight, so every component gets populated
    before the actual run starts."""
    if n_chains == 1:
        return np.array([d / 2.0])
    j = np.arange(n_chains)
    return d / 2.0 + j * d / (2.0 * (n_chains - 1))


@dataclass(frozen=True)
class RunSchedule:
    """Iteration counts of one model fit.

    Total sweeps per chain = warm_up_overfitting + warm_up +
    m_cycles * iter_per_cycle; one draw is retained at the end of each
    post-burn-in cycle.
    """

    m_cycles: int
    burn_cycles: int
    iter_per_cycle: int = 10
    warm_up: int = 5000
    warm_up_overfitting: int = 500

    def __post_init__(self):
        if self.m_cycles <= 0 or self.iter_per_cycle <= 0:
            raise ValueError("m_cycles and iter_per_cycle must be positive")
        if not 0 <= self.burn_cycles < self.m_cycles:
            raise ValueError(
                f"burn_cycles={self.burn_cycles} must be in [0, m_cycles={self.m_cycles})")
        if self.warm_up < 0 or self.warm_up_overfitting < 0:
            raise ValueError("warm-up lengths cannot be negative")

    @property
    def n_retained(self) -> int:
        return self.m_cycles - self.burn_cycles


@dataclass
class SwapStats:
    proposed: int = 0
    accepted: int = 0

    @property
    def rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0


def swap_log_ratio(state_i: ChainState, state_j: ChainState, kmax: int) -> float:
    """Log of the pre-truncation Metropolis ratio for exchanging the
    states of two chains: the product of each chain's Dirichlet prior
    density evaluated at the other chain's weights, over the product at
    its own weights."""
    a_i = np.full(kmax, state_i.dirichlet_mass)
    a_j = np.full(kmax, state_j.dirichlet_mass)
    return (dirichlet_logpdf(state_j.w, a_i) + dirichlet_logpdf(state_i.w, a_j)
            - dirichlet_logpdf(state_i.w, a_i) - dirichlet_logpdf(state_j.w, a_j))


def swap_accept_prob(state_i: ChainState, state_j: ChainState, kmax: int) -> float:
    return float(min(1.0, np.exp(min(swap_log_ratio(state_i, state_j, kmax), 0.0))))


def overfitting_init(model: Parameterization, q: int, prior: PriorConfig,
                     data: Dataset, ladder: TemperingLadder,
                     schedule: RunSchedule,
                     chain_streams: list[RandomStream]) -> list[ChainState]:
    """Initial chain states: fully random prior draws run for a short
    period under inflated Dirichlet masses so that all components are
    populated, then handed to the actual ladder."""
    d = component_dim(data.p, q)
    inflated = overfit_gammas(d, ladder.n_chains)
    states = []
    for j in range(ladder.n_chains):
        state = draw_prior_state(model, q, prior, data.n, data.p,
                                 float(inflated[j]), chain_streams[j])
        for _ in range(schedule.warm_up_overfitting):
            gibbs_sweep(state, data, model, prior, chain_streams[j])
        state.dirichlet_mass = ladder.mass(j)
        states.append(state)
    return states


def _allocate_trace(model: Parameterization, q: int, kmax: int,
                    n: int, p: int, t_keep: int) -> PosteriorTrace:
    return PosteriorTrace(
        model=model, q=q, kmax=kmax,
        z=np.zeros((t_keep, n), dtype=np.int64),
        w=np.zeros((t_keep, kmax)),
        mu=np.zeros((t_keep, kmax, p)),
        lam=np.zeros((t_keep,) + model.lambda_shape(kmax, p, q)),
        sigma=np.zeros((t_keep,) + model.sigma_shape(kmax, p)),
        alive=np.zeros((t_keep, kmax), dtype=bool),
        loglik=np.zeros(t_keep))


def run_model(model: Parameterization, q: int, prior: PriorConfig,
              data: Dataset, schedule: RunSchedule, ladder: TemperingLadder,
              stream: RandomStream, progress=None):
    """Fit one (parameterization, q) model.

    Runs the overfitting initialization, a swap-free warm-up, then
    m_cycles cycles of iter_per_cycle sweeps per chain; at each cycle end
    one uniformly chosen adjacent pair is proposed for a state swap.  The
    cold chain's draw at each post-burn-in cycle end is retained together
    with its alive set and observed-data mixture log-likelihood.

    Returns (PosteriorTrace, SwapStats).
    """
    validate_config(model, prior, q, data.p)
    J = ladder.n_chains
    chain_streams = [stream.substream(j) for j in range(J)]
    swap_stream = stream.substream(J)

    states = overfitting_init(model, q, prior, data, ladder, schedule, chain_streams)
    for j in range(J):
        for _ in range(schedule.warm_up):
            gibbs_sweep(states[j], data, model, prior, chain_streams[j])

    trace = _allocate_trace(model, q, prior.kmax, data.n, data.p, schedule.n_retained)
    swaps = SwapStats()
    t_out = 0
    for cycle in range(schedule.m_cycles):
        for j in range(J):
            for _ in range(schedule.iter_per_cycle):
                gibbs_sweep(states[j], data, model, prior, chain_streams[j])
        if J > 1:
            j_star = int(swap_stream.gen.integers(J - 1))
            log_ratio = swap_log_ratio(states[j_star], states[j_star + 1], prior.kmax)
            swaps.proposed += 1
            if np.log(swap_stream.gen.random()) < log_ratio:
                # Masses stay with the ladder rank; the states move.
                states[j_star], states[j_star + 1] = states[j_star + 1], states[j_star]
                states[j_star].dirichlet_mass = ladder.mass(j_star)
                states[j_star + 1].dirichlet_mass = ladder.mass(j_star + 1)
                swaps.accepted += 1
        if cycle >= schedule.burn_cycles:
            _record_draw(trace, t_out, states[0], data, model, prior.kmax)
            t_out += 1
        if progress is not None:
            alive = [int(np.count_nonzero(np.bincount(s.z, minlength=prior.kmax)))
                     for s in states]
            progress(f"cycle={cycle + 1} alive={alive} swap_rate={swaps.rate:.4f}")
    if J > 1 and (swaps.rate < 0.02 or swaps.rate > 0.90):
        warnings.warn(
            f"{model.code} q={q}: swap acceptance rate {swaps.rate:.1%}; "
            "consider tuning the ladder increment delta", stacklevel=2)
    return trace, swaps


def _record_draw(trace: PosteriorTrace, t: int, state: ChainState,
                 data: Dataset, model: Parameterization, kmax: int) -> None:
    trace.z[t] = state.z
    trace.w[t] = state.w
    trace.mu[t] = state.mu
    trace.lam[t] = state.lam
    trace.sigma[t] = state.sigma
    trace.alive[t] = np.bincount(state.z, minlength=kmax) > 0
    trace.loglik[t] = selection.observed_loglik_state(state, data, model)


@dataclass
class ModelFit:
    """Outcome of one grid cell: trace plus selection digest, or the
    failure that killed it."""

    code: str
    q: int
    trace: PosteriorTrace | None = None
    swaps: SwapStats | None = None
    summary: object = None      # types.ModelSummary
    error: str | None = None


def _fit_one(code: str, q: int, prior: PriorConfig, data: Dataset,
             schedule: RunSchedule, ladder: TemperingLadder,
             stream: RandomStream, log_path=None) -> ModelFit:
    from .types import ModelSummary
    try:
        model = Parameterization.from_code(code)
        if log_path is not None:
            with open(log_path, "w") as fh:
                trace, swaps = run_model(
                    model, q, prior, data, schedule, ladder, stream,
                    progress=lambda line: print(line, file=fh))
        else:
            trace, swaps = run_model(model, q, prior, data, schedule, ladder, stream)
        summary = selection.summarize_model(trace, data, swaps.rate)
        return ModelFit(code=code, q=q, trace=trace, swaps=swaps, summary=summary)
    except Exception as exc:  # sibling models keep running
        msg = f"{type(exc).__name__}: {exc}"
        return ModelFit(code=code, q=q, error=msg,
                        summary=ModelSummary(code=code, q=q, error=msg))


def _grid_worker(payload) -> ModelFit:
    return _fit_one(*payload)


def run_grid(codes, q_values, prior: PriorConfig, data: Dataset,
             schedule: RunSchedule, stream: RandomStream,
             parallel_models: int = 1, log_dir=None,
             ladder: TemperingLadder | None = None) -> list[ModelFit]:
    """Fit every (code, q) cell independently with derived substreams.

    Substreams are assigned by cell index in a fixed canonical order, so
    results are identical whatever ``parallel_models`` is.  Failures are
    collected per cell without aborting siblings.  An explicit ``ladder``
    overrides the arithmetic one implied by the prior (the per-chain
    Dirichlet mass override).
    """
    if ladder is None:
        ladder = TemperingLadder.from_prior(prior)
    tasks = []
    index = 0
    for code in codes:
        for q in q_values:
            log_path = None
            if log_dir is not None:
                log_path = str(log_dir / f"{code}_q{q}.log")
            tasks.append((code, int(q), prior, data, schedule, ladder,
                          stream.substream(index), log_path))
            index += 1
    if parallel_models <= 1 or len(tasks) == 1:
        return [_grid_worker(t) for t in tasks]
    ctx = multiprocessing.get_context("spawn")
    with ctx.Pool(min(parallel_models, len(tasks))) as pool:
        return pool.map(_grid_worker, tasks)
