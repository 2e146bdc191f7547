import numpy as np
import pytest

from mfaclust import conditionals as cd
from mfaclust.errors import AllWeightsZero
from mfaclust.linalg import RandomStream
from mfaclust.types import (
    PARAMETERIZATIONS,
    ChainState,
    Dataset,
    Parameterization,
    PriorConfig,
    SuffStats,
    loading_mask,
    sigma_as_kp,
)
from support import (
    dense_logpdf,
    geweke_compare,
    geweke_marginal_conditional,
    geweke_successive_conditional,
    make_dataset,
    make_state,
    naive_suffstats,
)

UUU = Parameterization.from_code("UUU")


# -- sufficient statistics ---------------------------------------------------

@pytest.mark.parametrize("code", PARAMETERIZATIONS)
def test_suffstats_match_naive_loops(code):
    model = Parameterization.from_code(code)
    prior = PriorConfig(kmax=4, xi=np.array([0.3, -1.0, 0.5, 0.1]),
                        psi_diag=np.array([1.0, 2.0, 0.5, 1.5]))
    state = make_state(model, 2, prior, n=20, p=4, seed=code.__hash__() % 100)
    rng = np.random.default_rng(1)
    data = make_dataset(rng.standard_normal((20, 4)))
    suff = cd.compute_suffstats(state, data, model, prior)
    counts, A, B, tau, Delta, s, T_diag, M = naive_suffstats(state, data, model, prior)
    np.testing.assert_array_equal(suff.n, counts)
    for got, ref in [(suff.A, A), (suff.B, B), (suff.tau, tau),
                     (suff.Delta, Delta), (suff.s, s), (suff.T_diag, T_diag),
                     (suff.M, M)]:
        np.testing.assert_allclose(got, ref, atol=1e-12)
    assert suff.n.sum() == data.n


def test_suffstats_small_q1_instance_vs_loops():
    prior = PriorConfig(kmax=3)
    state = make_state(UUU, 1, prior, n=6, p=3, seed=9)
    data = make_dataset(np.random.default_rng(4).standard_normal((6, 3)))
    suff = cd.compute_suffstats(state, data, UUU, prior)
    _, A, B, tau, Delta, s, T_diag, _ = naive_suffstats(state, data, UUU, prior)
    np.testing.assert_allclose(suff.tau, tau, atol=1e-12)
    np.testing.assert_allclose(suff.Delta, Delta, atol=1e-12)
    np.testing.assert_allclose(suff.s, s, atol=1e-12)


def test_suffstats_empty_component_zero_blocks():
    prior = PriorConfig(kmax=3)
    state = make_state(UUU, 2, prior, n=8, p=3, seed=2)
    state.z[:] = 0   # components 1 and 2 empty
    data = make_dataset(np.random.default_rng(5).standard_normal((8, 3)))
    suff = cd.compute_suffstats(state, data, UUU, prior)
    assert suff.n[1] == suff.n[2] == 0
    assert np.all(suff.tau[1:] == 0) and np.all(suff.Delta[1:] == 0)
    assert np.all(suff.s[1:] == 0)


def test_suffstats_single_observation_definition():
    prior = PriorConfig(kmax=2)
    x = np.array([[1.5, -2.0]])
    data = make_dataset_raw(x)
    state = ChainState(
        w=np.array([1.0, 0.0]), mu=np.zeros((2, 2)),
        lam=np.zeros((2, 2, 1)), sigma=np.ones((2, 2)),
        y=np.zeros((1, 1)), z=np.zeros(1, dtype=np.int64),
        omega_diag=np.ones(1), dirichlet_mass=0.5)
    suff = cd.compute_suffstats(state, data, UUU, prior)
    np.testing.assert_allclose(suff.s[0], x[0] ** 2)


def make_dataset_raw(x):
    x = np.asarray(x, dtype=float)
    return Dataset(x=x, col_means=np.zeros(x.shape[1]), col_sds=np.ones(x.shape[1]))


def test_partial_suffstats_match_full():
    prior = PriorConfig(kmax=3)
    state = make_state(UUU, 2, prior, n=15, p=4, seed=3)
    data = make_dataset(np.random.default_rng(6).standard_normal((15, 4)))
    full = cd.compute_suffstats(state, data, UUU, prior)
    part = cd.compute_suffstats(state, data, UUU, prior, parts=cd.SUFF_LOADINGS)
    np.testing.assert_array_equal(part.tau, full.tau)
    np.testing.assert_array_equal(part.Delta, full.Delta)
    assert part.A is None and part.s is None
    part = cd.compute_suffstats(state, data, UUU, prior, parts=cd.SUFF_MEANS)
    np.testing.assert_array_equal(part.A, full.A)
    np.testing.assert_array_equal(part.B, full.B)
    part = cd.compute_suffstats(state, data, UUU, prior, parts=cd.SUFF_RESIDUALS)
    np.testing.assert_array_equal(part.s, full.s)


# -- allocation update -------------------------------------------------------

def two_component_state(mu_vals, n, q=1):
    K, p = 2, len(mu_vals[0])
    return ChainState(
        w=np.array([0.5, 0.5]), mu=np.array(mu_vals, dtype=float),
        lam=np.zeros((K, p, q)), sigma=np.ones((K, p)),
        y=np.zeros((n, q)), z=np.zeros(n, dtype=np.int64),
        omega_diag=np.ones(q), dirichlet_mass=0.5)


def test_allocation_probs_symmetric_components():
    state = two_component_state([[0.0, 0.0], [0.0, 0.0]], n=5)
    data = make_dataset_raw(np.random.default_rng(0).standard_normal((5, 2)))
    logits = cd.allocation_log_probs(state, data, UUU)
    probs = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(probs, 0.5, atol=1e-15)


def test_allocation_degenerate_weights():
    state = two_component_state([[0.0, 0.0], [0.0, 0.0]], n=200)
    state.w = np.array([1.0, 0.0])
    data = make_dataset_raw(np.random.default_rng(1).standard_normal((200, 2)))
    z = cd.update_z(state, data, UUU, RandomStream(3))
    assert np.all(z == 0)


def test_allocation_two_normal_hand_values():
    # means -3 and +3, unit variance, no factors; hand-evaluated densities:
    # at x the log-odds of component 2 are ((x+3)^2 - (x-3)^2)/2 = 6x
    state = ChainState(
        w=np.array([0.5, 0.5]), mu=np.array([[-3.0], [3.0]]),
        lam=np.zeros((2, 1, 1)), sigma=np.ones((2, 1)),
        y=np.zeros((3, 1)), z=np.zeros(3, dtype=np.int64),
        omega_diag=np.ones(1), dirichlet_mass=0.5)
    data = make_dataset_raw(np.array([[0.0], [3.0], [1.5]]))
    logits = cd.allocation_log_probs(state, data, UUU)
    probs = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    assert probs[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert probs[1, 1] == pytest.approx(np.exp(18) / (1 + np.exp(18)), rel=1e-12)
    assert probs[2, 1] == pytest.approx(np.exp(9) / (1 + np.exp(9)), rel=1e-12)


def test_allocation_probs_match_dense_path():
    prior = PriorConfig(kmax=5)
    state = make_state(UUU, 2, prior, n=40, p=6, seed=11)
    data = make_dataset(np.random.default_rng(12).standard_normal((40, 6)))
    logits = cd.allocation_log_probs(state, data, UUU)
    sig = sigma_as_kp(state.sigma, UUU, 5, 6)
    for k in range(5):
        ref = np.log(max(state.w[k], 1e-300)) + dense_logpdf(
            data.x, state.mu[k], state.lam[k], sig[k])
        np.testing.assert_allclose(logits[:, k], ref, atol=1e-8)


def test_allocation_underflow_raises():
    state = two_component_state([[np.nan, np.nan], [0.0, 0.0]], n=4)
    data = make_dataset_raw(np.ones((4, 2)))
    with pytest.raises(AllWeightsZero):
        cd.update_z(state, data, UUU, RandomStream(0))


# -- weight update -----------------------------------------------------------

def test_update_w_posterior_mean():
    state = ChainState(
        w=np.array([0.5, 0.5]), mu=np.zeros((2, 2)),
        lam=np.zeros((2, 2, 1)), sigma=np.ones((2, 2)),
        y=np.zeros((3, 1)), z=np.zeros(3, dtype=np.int64),
        omega_diag=np.ones(1), dirichlet_mass=0.05)
    stream = RandomStream(17)
    draws = np.array([cd.update_w(state, stream) for _ in range(100_000)])
    np.testing.assert_allclose(draws.mean(axis=0), [3.05 / 3.10, 0.05 / 3.10],
                               atol=0.01)


# -- mean update -------------------------------------------------------------

def test_update_mu_empty_components_sample_prior():
    # all components empty: the draw is N(xi, Psi) = N(0, I) coordinatewise
    prior = PriorConfig(kmax=400)
    K, p = 400, 50
    suff = SuffStats(n=np.zeros(K, dtype=int), A=np.ones((K, p)),
                     B=np.zeros((K, p)), tau=None, Delta=None, s=None,
                     T_diag=np.zeros(1), M=None)
    state = make_state(UUU, 1, PriorConfig(kmax=2), n=4, p=p, seed=0)
    draws = cd.update_mu(state, None, suff, prior, RandomStream(23))
    flat = draws.ravel()
    assert abs(flat.mean()) < 4 / np.sqrt(flat.size)
    assert abs(flat.var() - 1.0) < 0.03


def test_update_mu_posterior_mean_formula():
    # Sigma = I, no loadings, Psi = I, xi = 0: mean = n_k xbar / (n_k + 1)
    prior = PriorConfig(kmax=2)
    rng = np.random.default_rng(3)
    x = rng.standard_normal((12, 3)) + 2.0
    data = make_dataset_raw(x)
    state = ChainState(
        w=np.array([1.0, 0.0]), mu=np.zeros((2, 3)),
        lam=np.zeros((2, 3, 1)), sigma=np.ones((2, 3)),
        y=np.zeros((12, 1)), z=np.zeros(12, dtype=np.int64),
        omega_diag=np.ones(1), dirichlet_mass=0.5)
    suff = cd.compute_suffstats(state, data, UUU, prior)
    np.testing.assert_allclose(suff.B[0] / suff.A[0], 12 * x.mean(axis=0) / 13.0,
                               atol=1e-12)
    stream = RandomStream(29)
    draws = np.array([cd.update_mu(state, data, suff, prior, stream)[0]
                      for _ in range(20_000)])
    np.testing.assert_allclose(draws.mean(axis=0), 12 * x.mean(axis=0) / 13.0,
                               atol=4 * np.sqrt(1 / 13.0 / 20_000) + 1e-3)
    np.testing.assert_allclose(draws.var(axis=0), 1 / 13.0, rtol=0.05)


# -- loading update ----------------------------------------------------------

def test_update_lambda_prior_reduction():
    # no assigned data: each free row entry is N(0, omega^2) on its prefix
    q, p = 2, 3000
    prior = PriorConfig(kmax=1)
    omega = np.array([2.0, 0.5])
    suff = SuffStats(n=np.zeros(1, dtype=int), A=None, B=None,
                     tau=np.zeros((1, p, q)), Delta=np.zeros((1, p, q, q)),
                     s=None, T_diag=np.zeros(q), M=None)
    state = ChainState(
        w=np.array([1.0]), mu=np.zeros((1, p)), lam=np.zeros((1, p, q)),
        sigma=np.ones((1, p)), y=np.zeros((2, q)), z=np.zeros(2, dtype=np.int64),
        omega_diag=omega ** 2, dirichlet_mass=0.5)
    lam = cd.update_lambda(state, None, suff, prior, UUU, RandomStream(31))
    full_rows = lam[0, q - 1:, :]
    assert abs(full_rows[:, 0].std() - 2.0) / 2.0 < 0.05
    assert abs(full_rows[:, 1].std() - 0.5) / 0.5 < 0.05
    assert np.all(lam[0][~loading_mask(p, q)] == 0.0)


def test_update_lambda_flat_prior_limit():
    # q=1, one observation with y=1, sigma^2=1, omega^2 -> inf:
    # posterior for each row is N(x_r - mu_r, 1)
    p = 4000
    prior = PriorConfig(kmax=1)
    target = 1.7
    tau = np.full((1, p, 1), target)     # (x_r - mu_r) * y / sigma^2
    Delta = np.ones((1, p, 1, 1))        # y^2 / sigma^2
    suff = SuffStats(n=np.array([1]), A=None, B=None, tau=tau, Delta=Delta,
                     s=None, T_diag=np.zeros(1), M=None)
    state = ChainState(
        w=np.array([1.0]), mu=np.zeros((1, p)), lam=np.zeros((1, p, 1)),
        sigma=np.ones((1, p)), y=np.ones((1, 1)), z=np.zeros(1, dtype=np.int64),
        omega_diag=np.array([1e12]), dirichlet_mass=0.5)
    lam = cd.update_lambda(state, None, suff, prior, UUU, RandomStream(37))
    assert lam[0, :, 0].mean() == pytest.approx(target, abs=4 / np.sqrt(p))


def test_update_lambda_structural_zeros_stay_exact():
    prior = PriorConfig(kmax=3)
    model = Parameterization.from_code("UUU")
    state = make_state(model, 3, prior, n=30, p=6, seed=41)
    data = make_dataset(np.random.default_rng(42).standard_normal((30, 6)))
    stream = RandomStream(43)
    mask = loading_mask(6, 3)
    for _ in range(200):
        suff = cd.compute_suffstats(state, data, model, prior)
        state.lam = cd.update_lambda(state, data, suff, prior, model, stream)
        assert np.all(state.lam[:, ~mask] == 0.0)


def test_update_lambda_shared_pools_components():
    prior = PriorConfig(kmax=3)
    model = Parameterization.from_code("CUU")
    state = make_state(model, 2, prior, n=25, p=4, seed=44)
    data = make_dataset(np.random.default_rng(45).standard_normal((25, 4)))
    suff = cd.compute_suffstats(state, data, model, prior)
    np.testing.assert_allclose(suff.tau_pooled, suff.tau.sum(axis=0), atol=1e-13)
    lam = cd.update_lambda(state, data, suff, prior, model, RandomStream(46))
    assert lam.shape == (4, 2)


# -- error-variance update ---------------------------------------------------

def test_update_sigma_scalar_mode_moments():
    # alpha=beta=0.5, n=2, p=2, total residual 4 -> Gamma(2.5, 2.5), mean 1
    prior = PriorConfig(kmax=2)
    model = Parameterization.from_code("UCC")
    data = make_dataset_raw(np.zeros((2, 2)))
    suff = SuffStats(n=np.array([2, 0]), A=None, B=None, tau=None, Delta=None,
                     s=np.array([[2.0, 2.0], [0.0, 0.0]]), T_diag=np.zeros(1),
                     M=None)
    state = make_state(model, 1, prior, n=2, p=2, seed=47)
    stream = RandomStream(48)
    draws = np.array([1.0 / cd.update_sigma(state, data, suff, prior, model, stream)
                      for _ in range(20_000)])
    assert draws.mean() == pytest.approx(2.5 / 2.5, rel=0.02)
    assert draws.var() == pytest.approx(2.5 / 2.5 ** 2, rel=0.1)


def test_update_sigma_unconstrained_empty_component_prior():
    # vectorized MC: many identical empty cells draw the Gamma(alpha, beta) prior
    K, p = 100, 200
    prior = PriorConfig(kmax=K)
    model = UUU
    data = make_dataset_raw(np.zeros((2, p)))
    suff = SuffStats(n=np.zeros(K, dtype=int), A=None, B=None, tau=None,
                     Delta=None, s=np.zeros((K, p)), T_diag=np.zeros(1), M=None)
    state = make_state(model, 1, PriorConfig(kmax=2), n=2, p=p, seed=49)
    state = ChainState(w=np.full(K, 1.0 / K), mu=np.zeros((K, p)),
                       lam=np.zeros((K, p, 1)), sigma=np.ones((K, p)),
                       y=np.zeros((2, 1)), z=np.zeros(2, dtype=np.int64),
                       omega_diag=np.ones(1), dirichlet_mass=0.5)
    prec = 1.0 / cd.update_sigma(state, data, suff, prior, model, RandomStream(50))
    flat = prec.ravel()
    assert flat.mean() == pytest.approx(1.0, rel=0.02)          # alpha/beta
    assert flat.var() == pytest.approx(2.0, rel=0.1)            # alpha/beta^2


def test_update_sigma_mode_shapes():
    prior = PriorConfig(kmax=3)
    rng = np.random.default_rng(51)
    data = make_dataset(rng.standard_normal((30, 4)))
    for code, shape in [("UUU", (3, 4)), ("UCU", (4,)), ("UUC", (3,)), ("UCC", ())]:
        model = Parameterization.from_code(code)
        state = make_state(model, 2, prior, n=30, p=4, seed=52)
        suff = cd.compute_suffstats(state, data, model, prior)
        sigma = cd.update_sigma(state, data, suff, prior, model, RandomStream(53))
        assert np.asarray(sigma).shape == shape
        assert np.all(np.asarray(sigma) > 0)


def test_update_sigma_shared_mode_moments():
    # shared, non-isotropic: per-variable Gamma(alpha + n/2, beta + s_r/2)
    n, p = 10, 3000
    prior = PriorConfig(kmax=2)
    model = Parameterization.from_code("UCU")
    data = make_dataset_raw(np.zeros((n, p)))
    s = np.zeros((2, p))
    s[0] = 6.0
    suff = SuffStats(n=np.array([n, 0]), A=None, B=None, tau=None, Delta=None,
                     s=s, T_diag=np.zeros(1), M=None)
    state = ChainState(w=np.array([1.0, 0.0]), mu=np.zeros((2, p)),
                       lam=np.zeros((2, p, 1)), sigma=np.ones(p),
                       y=np.zeros((n, 1)), z=np.zeros(n, dtype=np.int64),
                       omega_diag=np.ones(1), dirichlet_mass=0.5)
    prec = 1.0 / cd.update_sigma(state, data, suff, prior, model, RandomStream(54))
    expected = (0.5 + n / 2) / (0.5 + 3.0)
    assert prec.mean() == pytest.approx(expected, rel=0.02)


# -- factor update -----------------------------------------------------------

def test_update_y_prior_when_no_loadings():
    n, p, q = 100_000, 2, 2
    state = ChainState(
        w=np.array([1.0]), mu=np.zeros((1, p)), lam=np.zeros((1, p, q)),
        sigma=np.ones((1, p)), y=np.zeros((n, q)), z=np.zeros(n, dtype=np.int64),
        omega_diag=np.ones(q), dirichlet_mass=0.5)
    data = make_dataset_raw(np.random.default_rng(55).standard_normal((n, p)))
    y = cd.update_y(state, data, UUU, RandomStream(56))
    assert abs(y.mean()) < 4 / np.sqrt(y.size)
    np.testing.assert_allclose(np.cov(y.T), np.eye(q), atol=0.02)


def test_update_y_scalar_case():
    # p=1, q=1, lambda=1, sigma^2=1, x - mu = 2  ->  N(1, 1/2)
    n = 100_000
    state = ChainState(
        w=np.array([1.0]), mu=np.zeros((1, 1)), lam=np.ones((1, 1, 1)),
        sigma=np.ones((1, 1)), y=np.zeros((n, 1)), z=np.zeros(n, dtype=np.int64),
        omega_diag=np.ones(1), dirichlet_mass=0.5)
    data = make_dataset_raw(np.full((n, 1), 2.0))
    y = cd.update_y(state, data, UUU, RandomStream(57))
    assert y.mean() == pytest.approx(1.0, abs=4 / np.sqrt(2 * n))
    assert y.var() == pytest.approx(0.5, rel=0.02)


def test_update_y_covariance_matches_posterior_precision():
    n, p, q = 100_000, 4, 2
    rng = np.random.default_rng(58)
    lam = rng.standard_normal((1, p, q))
    sigma = rng.uniform(0.5, 2.0, (1, p))
    state = ChainState(
        w=np.array([1.0]), mu=np.zeros((1, p)), lam=lam, sigma=sigma,
        y=np.zeros((n, q)), z=np.zeros(n, dtype=np.int64),
        omega_diag=np.ones(q), dirichlet_mass=0.5)
    x = np.broadcast_to(rng.standard_normal(p), (n, p)).copy()
    data = make_dataset_raw(x)
    y = cd.update_y(state, data, UUU, RandomStream(59))
    m = np.eye(q) + lam[0].T @ np.diag(1.0 / sigma[0]) @ lam[0]
    np.testing.assert_allclose(np.cov(y.T), np.linalg.inv(m), atol=0.01)


# -- loading-scale update ----------------------------------------------------

def test_update_omega_prior_when_no_loadings():
    q = 50_000
    prior = PriorConfig(kmax=2, g=0.5, h=0.5)
    suff = SuffStats(n=np.zeros(2, dtype=int), A=None, B=None, tau=None,
                     Delta=None, s=None, T_diag=np.zeros(q), M=None)
    state = ChainState(w=np.array([0.5, 0.5]), mu=np.zeros((2, 3)),
                       lam=np.zeros((2, 3, q)), sigma=np.ones((2, 3)),
                       y=np.zeros((2, q)), z=np.zeros(2, dtype=np.int64),
                       omega_diag=np.ones(q), dirichlet_mass=0.5)
    prec = 1.0 / cd.update_omega(state, suff, prior, UUU, RandomStream(60))
    shape = 0.5 + 2 * 3 / 2.0
    assert prec.mean() == pytest.approx(shape / 0.5, rel=0.02)


def test_update_omega_worked_arithmetic():
    # K=2, p=2, q=1, all loadings 1: T_11 = 4, Gamma(g + 2, h + 2)
    q = 20_000
    prior = PriorConfig(kmax=2, g=0.5, h=0.5)
    suff = SuffStats(n=np.zeros(2, dtype=int), A=None, B=None, tau=None,
                     Delta=None, s=None, T_diag=np.full(q, 4.0), M=None)
    state = ChainState(w=np.array([0.5, 0.5]), mu=np.zeros((2, 2)),
                       lam=np.ones((2, 2, q)), sigma=np.ones((2, 2)),
                       y=np.zeros((2, q)), z=np.zeros(2, dtype=np.int64),
                       omega_diag=np.ones(q), dirichlet_mass=0.5)
    prec = 1.0 / cd.update_omega(state, suff, prior, UUU, RandomStream(61))
    assert prec.mean() == pytest.approx(2.5 / 2.5, rel=0.02)
    assert prec.var() == pytest.approx(2.5 / 2.5 ** 2, rel=0.1)


def test_update_omega_constrained_divides_by_k():
    q = 20_000
    K = 4
    prior = PriorConfig(kmax=K, g=0.5, h=0.5)
    model = Parameterization.from_code("CUU")
    t_val = 8.0
    suff = SuffStats(n=np.zeros(K, dtype=int), A=None, B=None, tau=None,
                     Delta=None, s=None, T_diag=np.full(q, t_val), M=None)
    state = ChainState(w=np.full(K, 0.25), mu=np.zeros((K, 3)),
                       lam=np.ones((3, q)), sigma=np.ones((K, 3)),
                       y=np.zeros((2, q)), z=np.zeros(2, dtype=np.int64),
                       omega_diag=np.ones(q), dirichlet_mass=0.5)
    prec = 1.0 / cd.update_omega(state, suff, prior, model, RandomStream(62))
    shape = 0.5 + 3 / 2.0
    rate = 0.5 + t_val / (2.0 * K)
    assert prec.mean() == pytest.approx(shape / rate, rel=0.02)


# -- whole-sweep properties --------------------------------------------------

@pytest.mark.parametrize("code", ["UUU", "CUC", "UCU", "CCC"])
def test_sweep_preserves_structure(code):
    model = Parameterization.from_code(code)
    prior = PriorConfig(kmax=4)
    state = make_state(model, 2, prior, n=40, p=5, seed=63)
    data = make_dataset(np.random.default_rng(64).standard_normal((40, 5)))
    stream = RandomStream(65)
    mask = loading_mask(5, 2)
    for sweep in range(150):
        cd.gibbs_sweep(state, data, model, prior, stream)
        if sweep % 10 == 0:
            state.validate(model, 4)
            lam = state.lam if state.lam.ndim == 3 else state.lam[None]
            assert np.all(lam[:, ~mask] == 0.0)
            assert np.all(np.asarray(state.sigma) > 0)
            assert np.all(state.omega_diag > 0)


def test_sweep_replay_is_bit_identical():
    model = Parameterization.from_code("UUC")
    prior = PriorConfig(kmax=3)
    data = make_dataset(np.random.default_rng(66).standard_normal((25, 4)))

    def run():
        state = make_state(model, 2, prior, n=25, p=4, seed=67)
        stream = RandomStream(68)
        for _ in range(30):
            cd.gibbs_sweep(state, data, model, prior, stream)
        return state

    a, b = run(), run()
    assert np.array_equal(a.w, b.w)
    assert np.array_equal(a.mu, b.mu)
    assert np.array_equal(a.lam, b.lam)
    assert np.array_equal(np.asarray(a.sigma), np.asarray(b.sigma))
    assert np.array_equal(a.z, b.z)
    assert np.array_equal(a.y, b.y)


def test_geweke_joint_distribution_shared_loadings():
    """Getting-it-right check on the fully constrained parameterization:
    the successive-conditional chain (sweep + data re-simulation) must
    match independent prior draws on first and second moments."""
    model = Parameterization.from_code("CCC")
    prior = PriorConfig(kmax=3, gamma=1.5, alpha_sigma=4.0, beta_sigma=4.0,
                        g=4.0, h=4.0)
    iters = 20_000
    mc = geweke_marginal_conditional(model, 1, prior, 8, 3, iters, RandomStream(11, 0))
    sc = geweke_successive_conditional(model, 1, prior, 8, 3, iters, RandomStream(12, 0))
    assert geweke_compare(mc, sc) < 4.0
