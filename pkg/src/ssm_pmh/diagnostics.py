"""Chain and filter diagnostics: autocorrelation, IACT, posterior summaries,
state-error metrics against a reference filter, a two-sample KS stationarity
check, and the log-likelihood-spread study used to pick the particle count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exceptions import DegeneracyError, DiagnosticsError, InputError
from .models import LgssParameters, SvParameters
from .particle_filter import bpf_sv, fapf_lgss

LOG_FLOOR = -745.0
DEFAULT_LAGS = 100


@dataclass(frozen=True)
class MixingReport:
    names: tuple
    acf: np.ndarray  # p x L, lags 1..L
    iact: np.ndarray
    lag_cutoff: int
    acceptance_rate: float


@dataclass(frozen=True)
class PosteriorSummary:
    names: tuple
    mean: np.ndarray
    variance: np.ndarray
    std: np.ndarray
    credible_interval_95: np.ndarray  # p x 2


@dataclass(frozen=True)
class KsResult:
    statistic: float
    critical_value: float
    passed: bool
    thinning_lag: int
    sizes: tuple


def autocorrelation(x, max_lag: int) -> np.ndarray:
    """Sample ACF at lags 0..max_lag, autocovariances divided by K."""
    x = np.asarray(x, dtype=float)
    K = x.size
    d = x - x.mean()
    c0 = d @ d / K
    if not c0 > 0:
        raise DiagnosticsError("sequence has zero variance")
    nfft = 1 << int(math.ceil(math.log2(2 * K)))
    f = np.fft.rfft(d, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1] / K
    return acov / c0


def estimate_iact(x, L: int = DEFAULT_LAGS):
    """Truncated IACT, 1 + 2 * sum_{tau=1..L} rho_tau; returns ``(iact, acf[1..L])``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size <= L + 1:
        raise DiagnosticsError(f"need more than L + 1 = {L + 1} samples, got {x.size}")
    rho = autocorrelation(x, L)[1:]
    return 1.0 + 2.0 * float(rho.sum()), rho


def mixing_report(trace, burn_in: int, L: int = DEFAULT_LAGS) -> MixingReport:
    rows = trace.parameters[burn_in:]
    acfs, iacts = [], []
    for j in range(rows.shape[1]):
        iact, rho = estimate_iact(rows[:, j], L)
        acfs.append(rho)
        iacts.append(iact)
    return MixingReport(trace.names, np.array(acfs), np.array(iacts), L, trace.acceptance_rate)


def posterior_summary(trace, burn_in: int, names: Optional[Sequence[str]] = None) -> PosteriorSummary:
    """Per-coordinate mean, variance, std and central 95% interval after burn-in.

    ``trace`` may be a ChainTrace or a K x p array.
    """
    if hasattr(trace, "parameters"):
        rows, names = trace.parameters, trace.names
    else:
        rows = np.asarray(trace, dtype=float)
    rows = rows.reshape(rows.shape[0], -1)
    kept = rows[burn_in:]
    if kept.shape[0] == 0:
        raise DiagnosticsError(f"no samples left after burn-in of {burn_in}")
    if names is None:
        names = tuple(f"theta{j}" for j in range(rows.shape[1]))
    mean = kept.mean(axis=0)
    variance = kept.var(axis=0, ddof=1) if kept.shape[0] > 1 else np.zeros(kept.shape[1])
    interval = np.percentile(kept, [2.5, 97.5], axis=0).T
    return PosteriorSummary(tuple(names), mean, variance, np.sqrt(variance), interval)


def state_error_metrics(pf_states, reference_states):
    """(log mean |error|, log mean error^2), each floored at -745."""
    a = np.asarray(pf_states, dtype=float)
    b = np.asarray(reference_states, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise InputError(f"state sequences must be equal-length and non-empty: {a.shape} vs {b.shape}")
    err = a - b
    bias = np.mean(np.abs(err))
    mse = np.mean(err**2)
    return _floored_log(bias), _floored_log(mse)


def _floored_log(v):
    return max(math.log(v), LOG_FLOOR) if v > 0 else LOG_FLOOR


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_critical_value(n: int, m: int, alpha: float) -> float:
    """Asymptotic two-sample critical value c(alpha) * sqrt((n + m) / (n m))."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) * math.sqrt((n + m) / (n * m))


def default_thinning_lag(x, cap: int = 100) -> int:
    """Smallest lag whose autocorrelation drops below 0.05, at most ``cap``."""
    x = np.asarray(x, dtype=float)
    max_lag = min(cap, x.size - 1)
    rho = autocorrelation(x, max_lag)
    below = np.nonzero(rho[1:] < 0.05)[0]
    return int(below[0] + 1) if below.size else max_lag


def ks_stationarity_test(x, burn_in: int, thinning_lag: Optional[int] = None,
                         alpha: float = 0.05) -> KsResult:
    """Compare the two halves of the post-burn-in chain with a KS test.

    Both halves are thinned to every ``thinning_lag``-th sample first; the
    test passes when the statistic is below the alpha-level critical value.
    """
    x = np.asarray(x, dtype=float)
    kept = x[burn_in:]
    half = kept.size // 2
    if half < 20:
        raise DiagnosticsError("post-burn-in segment too short for a KS test")
    if thinning_lag is None:
        thinning_lag = default_thinning_lag(kept)
    thinning_lag = max(1, int(thinning_lag))
    first = kept[:half][::thinning_lag]
    second = kept[half: 2 * half][::thinning_lag]
    if min(first.size, second.size) < 20:
        raise DiagnosticsError(
            f"fewer than 20 samples per half after thinning by {thinning_lag}"
        )
    stat = ks_statistic(first, second)
    crit = ks_critical_value(first.size, second.size, alpha)
    return KsResult(stat, crit, stat < crit, thinning_lag, (first.size, second.size))


@dataclass(frozen=True)
class LoglikStudyRow:
    particles: int
    std_loglik: float
    runs_ok: int
    runs_failed: int
    seconds_per_run: float


def loglik_std_study(y, params, N_grid: Sequence[int], runs: int, seed: int = 0):
    """Sample std of the log-likelihood estimate over ``runs`` independent filter runs per N.

    LGSS parameters use the fully adapted filter, SV parameters the bootstrap
    filter. Degenerate runs are dropped and counted. Timings are wall-clock
    and only indicative.
    """
    if runs < 2:
        raise ValueError("runs must be at least 2")
    if isinstance(params, LgssParameters):
        def run(N, rng):
            return fapf_lgss(y, params, N, rng=rng).log_likelihood
    elif isinstance(params, SvParameters):
        def run(N, rng):
            return bpf_sv(y, params, N, rng=rng, sample_path=False).log_likelihood
    else:
        raise TypeError(f"unsupported parameter type {type(params).__name__}")

    table = []
    for N, seq in zip(N_grid, np.random.SeedSequence(seed).spawn(len(N_grid))):
        values, failed = [], 0
        start = time.perf_counter()
        for child in seq.spawn(runs):
            try:
                values.append(run(int(N), np.random.default_rng(child)))
            except DegeneracyError:
                failed += 1
        elapsed = (time.perf_counter() - start) / runs
        std = float(np.std(values, ddof=1)) if len(values) > 1 else float("nan")
        table.append(LoglikStudyRow(int(N), std, len(values), failed, elapsed))
    return table
