import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_params
from mgsn.datasets import simulation_params, stiffness
from mgsn.distribution import MgsnParams
from mgsn.errors import DegenerateUpdate, DimensionMismatch, InvalidParameter
from mgsn.estimation import (
    PAPER_EM,
    PAPER_ITERATIONS,
    DataMatrix,
    EmControl,
    default_grid,
    default_init,
    em_e_step,
    em_fit_diag,
    em_fit_fixed_p,
    em_fit_mu_zero,
    em_m_step,
    fit_normal,
    observed_loglik,
    profile_fit,
)
from mgsn.sampling import RngStream, sample_mgsn
from mgsn.series import PAPER_SERIES


def _sim(seed, p=0.5, n=100, params=None):
    prm = simulation_params(p) if params is None else params
    return DataMatrix(sample_mgsn(RngStream(seed), prm, n))


def _q(x, a, b, mu, sigma):
    """Expected complete-data log-likelihood, up to terms free of (mu, Sigma)."""
    si = np.linalg.inv(sigma)
    quad = np.einsum("ij,jk,ik->i", x, si, x)
    lin = x @ si @ mu
    return float(np.sum(-0.5 * np.linalg.slogdet(sigma)[1] - 0.5 * (b * quad - 2 * lin + a * (mu @ si @ mu))))


# ------------------------------------------------------------ data


def test_data_matrix_validation():
    with pytest.raises(InvalidParameter):
        DataMatrix(np.zeros((1, 2)))
    with pytest.raises(InvalidParameter):
        DataMatrix(np.array([[1.0, np.nan], [2.0, 3.0]]))
    with pytest.raises(DimensionMismatch):
        DataMatrix(np.zeros((3, 2)), ("a",))
    d = DataMatrix(np.arange(6.0).reshape(3, 2))
    assert d.labels == ("x1", "x2") and (d.n, d.d) == (3, 2)
    with pytest.raises(ValueError):
        d.values[0, 0] = 1.0
    assert np.array_equal(d.scaled(2.0).values, 2 * d.values)


# ------------------------------------------------------------ likelihood and E-step


def test_observed_loglik_trivial():
    for d in (1, 3):
        prm = MgsnParams(1.0, np.ones(d), np.eye(d))
        x = np.ones((2, d))
        assert observed_loglik(x, prm) == pytest.approx(-d * math.log(2 * math.pi))


def test_observed_loglik_against_direct_sum():
    prm = random_params(np.random.default_rng(2), 2, p=0.35)
    x = sample_mgsn(RngStream(2), prm, 5)
    ref = sum(oracles.mgsn_logpdf(r, prm.p, prm.mu, prm.sigma) for r in x)
    assert observed_loglik(x, prm) == pytest.approx(ref, abs=1e-8)


def test_e_step():
    x = _sim(1)
    e = em_e_step(x, simulation_params(1.0))
    assert np.all(e.a == 1) and np.all(e.b == 1)
    e = em_e_step(x, simulation_params(0.3))
    assert np.all(e.a >= 1) and np.all(e.b <= 1) and np.all(e.b > 0)
    assert e.loglik == pytest.approx(observed_loglik(x, simulation_params(0.3)))
    half = MgsnParams(0.5, [0.0], [[1.0]])
    e = em_e_step(np.array([[0.0], [0.0]]), half)
    a, b = oracles.cond_moments([0.0], 0.5, [0.0], [[1.0]])
    assert e.a[0] == pytest.approx(a, rel=1e-12) and e.b[0] == pytest.approx(b, rel=1e-12)


# ------------------------------------------------------------ M-step


def test_m_step_reduces_to_gaussian_mle():
    x = _sim(3).values
    ones = np.ones(len(x))
    mu, sigma = em_m_step(x, ones, ones)
    assert np.allclose(mu, x.mean(0))
    assert np.allclose(sigma, np.cov(x.T, bias=True))
    mu, sigma = em_m_step(np.array([[-1.0], [1.0]]), [1, 1], [1, 1])
    assert mu[0] == 0.0 and sigma[0, 0] == 1.0


def test_constrained_m_steps_at_unit_weights():
    x = _sim(4).values
    ones = np.ones(len(x))
    mu, sigma = em_m_step(x, ones, ones, "mu_zero")
    assert np.array_equal(mu, np.zeros(4)) and np.allclose(sigma, x.T @ x / len(x))
    mu, sigma = em_m_step(x, ones, ones, "diag_sigma")
    assert np.allclose(mu, x.mean(0)) and np.allclose(sigma, np.diag(x.var(0)))
    with pytest.raises(InvalidParameter):
        em_m_step(x, ones, ones, "banded")


@pytest.mark.parametrize("constraint", ["none", "mu_zero", "diag_sigma"])
def test_m_step_maximizes_q(constraint):
    rng = np.random.default_rng(7)
    x = _sim(5, n=60).values
    a = 1 + rng.exponential(2.0, len(x))
    b = 1 / a * rng.uniform(1.0, 1.5, len(x))
    mu, sigma = em_m_step(x, a, b, constraint)
    best = _q(x, a, b, mu, sigma)
    for _ in range(100):
        dm = np.zeros(4) if constraint == "mu_zero" else rng.normal(scale=0.05, size=4)
        e = rng.normal(scale=0.05, size=(4, 4))
        ds = np.diag(np.diag(e)) if constraint == "diag_sigma" else (e + e.T) / 2
        try:
            np.linalg.cholesky(sigma + ds)
        except np.linalg.LinAlgError:
            continue
        assert _q(x, a, b, mu + dm, sigma + ds) <= best + 1e-9


def test_jitter_and_degenerate_update():
    # a collinear scatter is rescued by a small diagonal loading
    x = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    _, sigma = em_m_step(x, np.ones(3), np.ones(3))
    assert np.linalg.eigvalsh(sigma)[0] > 0
    assert np.allclose(sigma, np.full((2, 2), 2 / 3), atol=1e-4)
    # weights far from any E-step output give an indefinite update that jitter cannot fix
    x = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    with pytest.raises(DegenerateUpdate):
        em_m_step(x, np.full(3, 50.0), np.full(3, 1e-3), iteration=4)
    with pytest.raises(DegenerateUpdate) as exc:
        em_fit_fixed_p(np.array([[0.0, 1.0], [2.0, 5.0]]), 0.5)
    assert exc.value.iteration == 0


# ------------------------------------------------------------ EM


def test_fixed_p_one_is_closed_form():
    x = _sim(6)
    fit = em_fit_fixed_p(x, 1.0)
    assert fit.n_iter == 1 and fit.converged
    assert np.allclose(fit.params.mu, x.values.mean(0))
    assert fit.loglik == pytest.approx(fit_normal(x).loglik)
    assert em_fit_mu_zero(x, 1.0).params.sigma == pytest.approx(x.values.T @ x.values / x.n)
    assert np.allclose(em_fit_diag(x, 1.0).params.sigma, np.diag(x.values.var(0)))


@settings(max_examples=12)
@given(st.sampled_from([1, 2, 4]), st.sampled_from([0.3, 0.6, 0.9]), st.integers(0, 2**32 - 1))
def test_em_ascent_all_variants(d, p, seed):
    rng = np.random.default_rng(seed)
    x = sample_mgsn(RngStream(seed), random_params(rng, d, p), 80)
    for fit in (em_fit_fixed_p(x, p), em_fit_mu_zero(x, p), em_fit_diag(x, p)):
        assert np.all(np.diff(fit.loglik_trace) >= -1e-8)


def test_paper_mode_runs_twenty_iterations():
    fit = em_fit_fixed_p(_sim(7), 0.5, ctl=PAPER_EM, sctl=PAPER_SERIES)
    assert fit.n_iter == PAPER_ITERATIONS
    assert len(fit.loglik_trace) == PAPER_ITERATIONS + 1


def test_convergence_flag_and_max_iter():
    x = _sim(8)
    assert em_fit_fixed_p(x, 0.5).converged
    fit = em_fit_fixed_p(x, 0.5, ctl=EmControl(max_iter=2))
    assert fit.n_iter == 2 and not fit.converged
    with pytest.raises(InvalidParameter):
        EmControl(max_iter=0)


def test_moments_initialization_reaches_same_optimum():
    x = _sim(9)
    a = em_fit_fixed_p(x, 0.5)
    b = em_fit_fixed_p(x, 0.5, init_method="moments")
    assert b.loglik == pytest.approx(a.loglik, abs=1e-4)
    mu, _ = default_init(x, p=0.5, method="moments")
    assert np.allclose(mu, 0.5 * x.values.mean(0))


def test_nesting_of_constrained_fits():
    for seed in range(5):
        x = _sim(10 + seed)
        for p in (0.3, 0.7):
            full = em_fit_fixed_p(x, p)
            # start the free fit where the constrained one ended to compare like with like
            for con in (em_fit_mu_zero(x, p), em_fit_diag(x, p)):
                free = em_fit_fixed_p(x, p, (con.params.mu, con.params.sigma))
                assert con.loglik <= free.loglik + 1e-8
                assert con.loglik <= max(full.loglik, free.loglik) + 1e-8


def test_table1_config_estimates_reasonable():
    fits = [em_fit_fixed_p(_sim(100 + r), 0.5) for r in range(20)]
    mu = np.mean([f.params.mu for f in fits], axis=0)
    assert np.allclose(mu, [0.0053, 0.0047, 1.0097, 1.0055], atol=3 * math.sqrt(0.1430 / 20) * 2)


# ------------------------------------------------------------ profile


def test_default_grid():
    g = default_grid()
    assert g[0] == 0.02 and g[-1] == 1.0 and len(g) == 50


def test_profile_trace_and_maximum():
    x = _sim(20)
    fit = profile_fit(x, np.linspace(0.1, 1.0, 10))
    trace = fit.trace_array()
    assert np.all(np.diff(trace[:, 0]) > 0)
    assert np.all(np.isfinite(trace[:, 1]))
    assert fit.loglik == trace[:, 1].max()
    assert fit.p == trace[np.argmax(trace[:, 1]), 0]
    assert fit.loglik >= fit_normal(x).loglik


def test_profile_grid_validation():
    with pytest.raises(InvalidParameter):
        profile_fit(_sim(21), [0.0, 0.5])
    with pytest.raises(InvalidParameter):
        profile_fit(_sim(21), [])


def test_profile_gaussian_truth_prefers_large_p():
    prm = MgsnParams(1.0, [1.0, -1.0], [[1.0, 0.3], [0.3, 2.0]])
    hits = sum(profile_fit(_sim(30 + r, params=prm, n=200), np.arange(1, 21) * 0.05).p >= 0.95 for r in range(20))
    assert hits > 10


def test_profile_scale_equivariance():
    c = 0.01
    raw = stiffness(raw=True)
    scaled = stiffness()
    grid = np.arange(80, 101) * 0.01
    a = profile_fit(raw, grid)
    b = profile_fit(scaled, grid)
    assert b.p == pytest.approx(a.p, abs=2e-4)
    assert b.loglik == pytest.approx(a.loglik - raw.n * raw.d * math.log(c), abs=1e-4)
    assert np.allclose(b.params.mu, c * np.asarray(a.params.mu), rtol=1e-3)
    assert np.allclose(b.params.sigma, c * c * np.asarray(a.params.sigma), rtol=1e-3)


def test_mu_zero_under_symmetric_truth():
    gaps = []
    for r in range(20):
        x = _sim(40 + r, params=simulation_params(0.5).replace(mu=np.zeros(4)))
        gaps.append(em_fit_fixed_p(x, 0.5).loglik - em_fit_mu_zero(x, 0.5).loglik)
    assert np.median(gaps) < 3


def test_diag_under_independent_truth():
    prm = MgsnParams(0.5, [1.0, 0.5], np.diag([1.0, 2.0]))
    gaps = []
    for r in range(20):
        x = _sim(60 + r, params=prm)
        gaps.append(em_fit_fixed_p(x, 0.5).loglik - em_fit_diag(x, 0.5).loglik)
    assert np.median(gaps) < 3
