import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from ssm_pmh.diagnostics import (
    LOG_FLOOR,
    autocorrelation,
    default_thinning_lag,
    estimate_iact,
    ks_critical_value,
    ks_statistic,
    ks_stationarity_test,
    loglik_std_study,
    mixing_report,
    posterior_summary,
    state_error_metrics,
)
from ssm_pmh.exceptions import DiagnosticsError, InputError
from ssm_pmh.models import LgssParameters, SvParameters
from ssm_pmh.pmh import ChainTrace


def ar1(rho, K, seed):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(K)
    x = np.empty(K)
    x[0] = e[0] / math.sqrt(1 - rho**2)
    for k in range(1, K):
        x[k] = rho * x[k - 1] + e[k]
    return x


@given(st.lists(st.floats(-100, 100), min_size=5, max_size=60).filter(lambda v: np.ptp(v) > 1e-3))
def test_autocorrelation_matches_direct_sum(v):
    x = np.array(v)
    K = x.size
    d = x - x.mean()
    direct = np.array([d[: K - k] @ d[k:] for k in range(K)]) / (d @ d)
    np.testing.assert_allclose(autocorrelation(x, K - 1), direct, atol=1e-9)


def test_iact_ar1_and_iid():
    assert estimate_iact(ar1(0.5, 100_000, 0), 100)[0] == pytest.approx(3.0, abs=0.3)
    assert estimate_iact(np.random.default_rng(1).standard_normal(100_000), 100)[0] == pytest.approx(1.0, abs=0.2)


def test_iact_errors():
    with pytest.raises(DiagnosticsError):
        estimate_iact(np.ones(500), 10)
    with pytest.raises(DiagnosticsError):
        estimate_iact(np.arange(50.0), 100)


def _trace(rows):
    rows = np.asarray(rows, dtype=float)
    acc = np.ones(rows.shape[0], dtype=bool)
    return ChainTrace(("a", "b"), rows, np.zeros(rows.shape[0]), acc)


def test_posterior_summary_matches_numpy():
    rng = np.random.default_rng(0)
    rows = rng.normal([1.0, -2.0], [0.5, 2.0], size=(5000, 2))
    s = posterior_summary(_trace(rows), 1000)
    kept = rows[1000:]
    np.testing.assert_allclose(s.mean, kept.mean(0))
    np.testing.assert_allclose(s.variance, kept.var(0, ddof=1))
    np.testing.assert_allclose(s.credible_interval_95[:, 0], np.percentile(kept, 2.5, axis=0))
    assert s.names == ("a", "b")
    with pytest.raises(DiagnosticsError):
        posterior_summary(rows, 5000)


def test_mixing_report():
    rows = np.column_stack([ar1(0.5, 20000, 1), ar1(0.9, 20000, 2)])
    rep = mixing_report(_trace(rows), 0, 100)
    assert rep.acf.shape == (2, 100)
    assert rep.iact[0] == pytest.approx(3.0, abs=0.5)
    assert rep.iact[1] == pytest.approx(19.0, abs=4.0)


def test_state_error_metrics():
    bias, mse = state_error_metrics([1.0, 2.0], [0.0, 0.0])
    assert bias == pytest.approx(math.log(1.5))
    assert mse == pytest.approx(math.log(2.5))
    assert state_error_metrics([1.0], [1.0]) == (LOG_FLOOR, LOG_FLOOR)
    with pytest.raises(InputError):
        state_error_metrics([1.0, 2.0], [1.0])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # scipy p-value internals
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=40), st.lists(st.floats(-10, 10), min_size=1, max_size=40))
def test_ks_statistic_matches_scipy(a, b):
    assert ks_statistic(a, b) == pytest.approx(stats.ks_2samp(a, b, method="asymp").statistic, abs=1e-12)


def test_ks_critical_value_table():
    # c(0.05) = 1.358 and c(0.01) = 1.628 in the usual tables
    assert ks_critical_value(100, 100, 0.05) == pytest.approx(1.358 * math.sqrt(0.02), abs=1e-3)
    assert ks_critical_value(50, 80, 0.01) == pytest.approx(1.628 * math.sqrt(130 / 4000), abs=1e-3)


def test_ks_stationarity():
    rng = np.random.default_rng(3)
    ok = ks_stationarity_test(rng.standard_normal(4000), 0)
    assert ok.passed and ok.thinning_lag == 1
    drift = np.concatenate([rng.standard_normal(2000), 1.0 + rng.standard_normal(2000)])
    assert not ks_stationarity_test(drift, 0, thinning_lag=1).passed
    with pytest.raises(DiagnosticsError):
        ks_stationarity_test(rng.standard_normal(30), 0)


def test_default_thinning_lag():
    assert default_thinning_lag(ar1(0.9, 50000, 4)) == pytest.approx(math.log(0.05) / math.log(0.9), abs=4)
    x = np.cumsum(np.random.default_rng(0).standard_normal(3000))
    assert default_thinning_lag(x) == 100


def test_loglik_std_study(lgss_data, sv_data):
    rows = loglik_std_study(lgss_data.head(50), LgssParameters(0.75, 1.0, 0.1), [10, 100], 30, seed=1)
    assert [r.particles for r in rows] == [10, 100]
    assert rows[0].std_loglik > rows[1].std_loglik
    assert all(r.runs_ok == 30 and r.runs_failed == 0 for r in rows)
    again = loglik_std_study(lgss_data.head(50), LgssParameters(0.75, 1.0, 0.1), [10, 100], 30, seed=1)
    assert [r.std_loglik for r in rows] == [r.std_loglik for r in again]
    sv = loglik_std_study(sv_data.head(100), SvParameters(0.0, 0.9, 0.2), [20], 10)
    assert sv[0].std_loglik > 0
    with pytest.raises(ValueError):
        loglik_std_study(sv_data, SvParameters(0.0, 0.9, 0.2), [20], 1)


def test_posterior_summary_examples():
    s = posterior_summary(np.full((50, 1), 2.5), 10)
    assert s.mean[0] == 2.5 and s.variance[0] == 0.0
    x = np.random.default_rng(5).normal(3.0, 2.0, size=(100_000, 1))
    s = posterior_summary(x, 0)
    assert s.mean[0] == pytest.approx(3.0, abs=0.05) and s.variance[0] == pytest.approx(4.0, abs=0.15)
    streaming_mean, m2 = 0.0, 0.0
    for k, v in enumerate(x[:1000, 0], start=1):
        delta = v - streaming_mean
        streaming_mean += delta / k
        m2 += delta * (v - streaming_mean)
    s = posterior_summary(x[:1000], 0)
    assert s.mean[0] == pytest.approx(streaming_mean, abs=1e-10)
    assert s.variance[0] == pytest.approx(m2 / 999, abs=1e-10)


def test_state_error_offset():
    d = 0.37
    bias, mse = state_error_metrics(np.arange(10.0) + d, np.arange(10.0))
    assert bias == pytest.approx(math.log(d)) and mse == pytest.approx(2 * math.log(d))


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=30), st.integers(0, 10**6))
def test_mse_dominates_squared_bias(a, seed):
    b = np.random.default_rng(seed).normal(size=len(a))
    bias, mse = state_error_metrics(a, b)
    assert math.exp(mse) >= math.exp(bias) ** 2 * (1 - 1e-12)


def test_ks_test_size_under_null():
    rng = np.random.default_rng(6)
    rejections = sum(not ks_stationarity_test(rng.standard_normal(2000), 0, thinning_lag=1).passed
                     for _ in range(200))
    assert abs(rejections / 200 - 0.05) <= 0.04


def test_ks_examples():
    rng = np.random.default_rng(7)
    shifted = np.concatenate([rng.standard_normal(1000), 5 + rng.standard_normal(1000)])
    assert not ks_stationarity_test(shifted, 0, thinning_lag=1).passed
    assert ks_stationarity_test(rng.standard_normal(10_000), 0, thinning_lag=50).passed


@given(st.floats(0.1, 100), st.floats(-100, 100))
def test_ks_affine_invariance(scale, shift):
    x = ar1(0.3, 800, 3)
    a = ks_stationarity_test(x, 100, thinning_lag=2)
    b = ks_stationarity_test(scale * x + shift, 100, thinning_lag=2)
    assert a.statistic == b.statistic and a.passed == b.passed
