import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from ssm_pmh.exceptions import InputError, ParameterDomainError
from ssm_pmh.models import (
    LgssParameters,
    SvParameters,
    TimeSeries,
    UnconstrainedSvParameters,
    from_unconstrained,
    log_jacobian,
    log_jacobian_correction,
    log_prior_lgss,
    log_prior_sv,
    simulate_lgss,
    simulate_sv,
    to_unconstrained,
)

phis = st.floats(-0.999, 0.999)
sigmas = st.floats(0.01, 5.0)


def test_lgss_simulation_shapes_and_start():
    data = simulate_lgss(LgssParameters(0.75, 1.0, 0.1), 250, x0=0.0, rng=0)
    assert data.T == 250
    assert data.states.shape == (251,)
    assert data.states[0] == 0.0


def test_lgss_simulation_noise_free_limit_is_deterministic():
    data = simulate_lgss(LgssParameters(0.5, 1e-300, 1e-300), 5, x0=2.0, rng=1)
    np.testing.assert_allclose(data.states, 2.0 * 0.5 ** np.arange(6), rtol=0, atol=1e-250)


def test_lgss_simulation_follows_recursion():
    p = LgssParameters(0.75, 1.0, 0.1)
    data = simulate_lgss(p, 50, rng=3)
    rng = np.random.default_rng(3)
    v, e = rng.standard_normal(50), rng.standard_normal(50)
    x = data.states
    np.testing.assert_allclose(x[1:] - p.phi * x[:-1], v, atol=1e-12)
    np.testing.assert_allclose(data.observations - x[1:], 0.1 * e, atol=1e-12)


def test_lgss_stationary_variance_matches_theory():
    p = LgssParameters(0.75, 1.0, 0.1)
    x = simulate_lgss(p, 200_000, rng=7).states[1000:]
    assert x.var() == pytest.approx(1.0 / (1.0 - 0.75**2), rel=0.03)


def test_sv_simulation_stationary_moments():
    p = SvParameters(-0.2, 0.9, 0.3)
    data = simulate_sv(p, 200_000, rng=11)
    assert data.states.mean() == pytest.approx(-0.2, abs=0.02)
    assert data.states.var() == pytest.approx(p.stationary_variance, rel=0.05)
    # E[y^2] = E[exp(x)] = exp(mu + var/2)
    assert np.mean(data.observations**2) == pytest.approx(
        math.exp(-0.2 + p.stationary_variance / 2), rel=0.03)


@pytest.mark.parametrize("bad", [LgssParameters(1.0, 1.0, 0.1), LgssParameters(0.5, 0.0, 0.1),
                                 LgssParameters(0.5, 1.0, -1.0)])
def test_invalid_lgss_parameters_rejected(bad):
    assert not bad.is_valid()
    with pytest.raises(ParameterDomainError):
        simulate_lgss(bad, 10)


def test_invalid_sv_parameters_rejected():
    with pytest.raises(ParameterDomainError):
        simulate_sv(SvParameters(0.0, -1.2, 0.2), 10)
    assert log_prior_sv(SvParameters(0.0, 0.9, -0.1)) == -math.inf


def test_timeseries_length_checks():
    with pytest.raises(InputError):
        TimeSeries(np.array([]))
    with pytest.raises(InputError):
        TimeSeries(np.ones(3), np.ones(3))
    ts = TimeSeries(np.arange(5.0), np.arange(6.0))
    assert ts.head(2).states.tolist() == [0.0, 1.0, 2.0]


@given(phis)
def test_lgss_prior_matches_scipy(phi):
    assert log_prior_lgss(phi) == pytest.approx(stats.norm.logpdf(phi, 0.0, math.sqrt(0.5)), abs=1e-12)


@given(st.floats(-3, 3), phis, sigmas)
def test_sv_prior_matches_scipy(mu, phi, sigma_v):
    expected = (stats.norm.logpdf(mu, 0, 1) + stats.norm.logpdf(phi, 0.95, 0.05)
                + stats.gamma.logpdf(sigma_v, a=2.0, scale=0.1))
    assert log_prior_sv(SvParameters(mu, phi, sigma_v)) == pytest.approx(expected, rel=1e-10, abs=1e-9)


def test_priors_outside_support():
    assert log_prior_lgss(1.0) == -math.inf
    assert log_prior_lgss(-1.5) == -math.inf


@given(st.floats(-5, 5), st.floats(-0.99, 0.99), st.floats(0.001, 10))
def test_transform_round_trip(mu, phi, sigma_v):
    p = SvParameters(mu, phi, sigma_v)
    back = from_unconstrained(to_unconstrained(p))
    assert back.mu == mu
    assert abs(back.phi - phi) < 1e-12
    assert abs(back.sigma_v - sigma_v) < 1e-12 * max(1.0, sigma_v)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-4, 2))
def test_log_jacobian_matches_finite_differences(mu, psi, varsigma):
    u = np.array([mu, psi, varsigma])
    h = 1e-6
    J = np.empty((3, 3))
    for j in range(3):
        up, dn = u.copy(), u.copy()
        up[j] += h
        dn[j] -= h
        J[:, j] = (from_unconstrained(UnconstrainedSvParameters.from_array(up)).as_array()
                   - from_unconstrained(UnconstrainedSvParameters.from_array(dn)).as_array()) / (2 * h)
    p = from_unconstrained(UnconstrainedSvParameters(mu, psi, varsigma))
    assert log_jacobian(p) == pytest.approx(math.log(abs(np.linalg.det(J))), abs=1e-5)


def test_jacobian_correction_is_a_difference():
    a, b = SvParameters(0.0, 0.9, 0.2), SvParameters(0.1, 0.5, 0.4)
    expected = math.log(1 - 0.25) + math.log(0.4) - math.log(1 - 0.81) - math.log(0.2)
    assert log_jacobian_correction(a, b) == pytest.approx(expected, abs=1e-14)
    assert log_jacobian_correction(a, a) == 0.0


def test_prior_examples():
    assert log_prior_lgss(0.0) - log_prior_lgss(0.5) == pytest.approx(0.25 / (2 * 0.5), abs=1e-14)
    assert log_prior_lgss(0.3) == log_prior_lgss(-0.3)
    a = log_prior_sv(SvParameters(0.0, 0.95, 0.2)) - log_prior_sv(SvParameters(1.0, 0.95, 0.2))
    assert a == pytest.approx(0.5, abs=1e-14)
    assert log_prior_sv(SvParameters(0.0, 0.9, 0.1)) > log_prior_sv(SvParameters(0.0, 0.9, 0.3))
    assert log_prior_lgss(0.0, mean=0.0, variance=1.0) == pytest.approx(-0.5 * math.log(2 * math.pi))


def test_transform_examples():
    assert from_unconstrained(UnconstrainedSvParameters(0.3, 0.0, 0.0)) == SvParameters(0.3, 0.0, 1.0)
    assert abs(from_unconstrained(UnconstrainedSvParameters(0.0, 0.0, math.log(0.15))).sigma_v - 0.15) < 1e-15
    with pytest.raises(ParameterDomainError):
        to_unconstrained(SvParameters(0.0, 1.0, 0.2))
    assert log_jacobian_correction(SvParameters(0, 0, 0.1), SvParameters(0, 0, 0.2)) == pytest.approx(math.log(2))


@given(st.floats(-2, 2), phis, sigmas, st.floats(-2, 2), phis, sigmas)
def test_jacobian_correction_antisymmetric(m1, p1, s1, m2, p2, s2):
    a, b = SvParameters(m1, p1, s1), SvParameters(m2, p2, s2)
    assert log_jacobian_correction(a, b) == pytest.approx(-log_jacobian_correction(b, a), abs=1e-12)


@given(st.floats(-3, 3), phis, sigmas)
def test_sv_prior_finite_on_support(mu, phi, sigma_v):
    assert math.isfinite(log_prior_sv(SvParameters(mu, phi, sigma_v)))
