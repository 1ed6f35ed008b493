"""Particle filters with multinomial resampling at every step.

Two filters are provided:

* :func:`fapf_lgss` -- the fully adapted filter for the LGSS model. Particles
  are weighted by the predictive density p(y_{t+1} | x_t), resampled, and
  then moved with the optimal proposal p(x_{t+1} | x_t, y_{t+1}).
* :func:`bpf_sv` (and :func:`bpf_lgss`) -- bootstrap filters that propagate
  through the state dynamics and weight by the observation density.

Time indexing is 0-based over x_0..x_T. Column ``t`` of the particle system
holds x_t and the weights used to pick the ancestors of x_{t+1}. For the
fully adapted filter these are the look-ahead weights against y_{t+1}, so the
first likelihood increment is exactly p(y_1) when x_0 is a point mass.

Every run draws all of its randomness from one ``numpy.random.Generator`` up
front. Those draws are the auxiliary variables of the pseudo-marginal view:
fix them and the filter is a deterministic function of the parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .exceptions import DegeneracyError
from .models import LgssParameters, SvParameters, TimeSeries

_LOG_2PI = math.log(2.0 * math.pi)
_OBS_LINEAR = 0  # y_t ~ N(x_t, scale^2)
_OBS_VOLATILITY = 1  # y_t ~ N(0, exp(x_t))


@dataclass(frozen=True)
class ParticleSystem:
    """Full particle history of one filter run.

    All arrays are N x (T + 1). ``ancestor_indices[i, t]`` is the (0-based)
    parent at time t - 1 of particle i at time t; column 0 is the identity.
    ``log_weights`` are shifted so that each column's maximum is 0.
    """

    particles: np.ndarray
    log_weights: np.ndarray
    normalized_weights: np.ndarray
    ancestor_indices: np.ndarray

    @property
    def num_particles(self) -> int:
        return self.particles.shape[0]

    @property
    def T(self) -> int:
        return self.particles.shape[1] - 1

    def lineage(self) -> np.ndarray:
        """Genealogy of the final particles.

        Row i lists, for each time s, the index of the time-s ancestor of
        particle i at time T (the bookkeeping matrix that is resampled along
        with the particles in the textbook formulation).
        """
        N, cols = self.ancestor_indices.shape
        genealogy = np.empty((N, cols), dtype=np.int64)
        genealogy[:, -1] = np.arange(N)
        for t in range(cols - 1, 0, -1):
            genealogy[:, t - 1] = self.ancestor_indices[genealogy[:, t], t]
        return genealogy

    def path(self, index: int) -> np.ndarray:
        """State trajectory x_{0:T} ending in particle ``index`` at time T."""
        T = self.T
        out = np.empty(T + 1)
        j = int(index)
        for t in range(T, -1, -1):
            out[t] = self.particles[j, t]
            j = self.ancestor_indices[j, t]
        return out


@dataclass(frozen=True)
class FilterOutput:
    state_estimates: np.ndarray
    log_likelihood: float
    sampled_trajectory: Optional[np.ndarray] = None
    system: Optional[ParticleSystem] = None


# -- building blocks ----------------------------------------------------------


def normalize_log_weights(log_weights):
    """Return ``(normalized_weights, max_log_weight, sum_shifted)``.

    ``sum_shifted`` is sum(exp(log_weights - max_log_weight)). NaN entries are
    treated as zero weight.
    """
    v = np.asarray(log_weights, dtype=float)
    v = np.where(np.isnan(v), -np.inf, v)
    vmax = np.max(v) if v.size else -np.inf
    if not np.isfinite(vmax):
        raise DegeneracyError("all log-weights are -inf or NaN")
    shifted = np.exp(v - vmax)
    total = shifted.sum()
    return shifted / total, float(vmax), float(total)


def log_likelihood_increment(max_log_weight: float, sum_shifted: float, N: int) -> float:
    """log of (1/N) * sum_i v_i, from the shifted representation."""
    return max_log_weight + math.log(sum_shifted) - math.log(N)


def multinomial_resample(normalized_weights, rng=None, size=None) -> np.ndarray:
    """Draw ``size`` (default N) i.i.d. ancestor indices with P(j) = w_j.

    Uses the inverse CDF on sorted uniforms (O(N)); the result is then
    randomly permuted so every slot is an independent categorical draw.
    """
    w = np.asarray(normalized_weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty vector")
    if np.any(np.isnan(w)) or np.any(w < 0):
        raise DegeneracyError("weights must be non-negative and not NaN")
    total = w.sum()
    if not total > 0 or not np.isfinite(total):
        raise DegeneracyError("weights are not normalisable")
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"weights sum to {total}, expected 1")
    rng = np.random.default_rng(rng)
    M = w.size if size is None else int(size)
    out = np.empty(M, dtype=np.int64)
    _inverse_cdf(w, rng.standard_exponential(M + 1), out)
    return rng.permutation(out)


# -- compiled kernels ----------------------------------------------------------
# Both return the failing 1-based time index in ``status`` (0 on success).


@njit(cache=True)
def _normalize_row(logw, w):
    N = logw.shape[0]
    vmax = -np.inf
    for i in range(N):
        if np.isnan(logw[i]):
            logw[i] = -np.inf
        if logw[i] > vmax:
            vmax = logw[i]
    if not np.isfinite(vmax):
        return vmax, 0.0
    total = 0.0
    for i in range(N):
        logw[i] -= vmax
        w[i] = math.exp(logw[i])
        total += w[i]
    for i in range(N):
        w[i] /= total
    return vmax, total


@njit(cache=True)
def _inverse_cdf(w, exponentials, out):
    # Sorted uniforms from normalised cumulative exponential spacings, then a
    # single merge pass against the running CDF of ``w``.
    M = out.shape[0]
    N = w.shape[0]
    total = 0.0
    last = 0
    for i in range(N):
        total += w[i]
        if w[i] > 0.0:
            last = i
    norm = 0.0
    for k in range(M + 1):
        norm += exponentials[k]
    scale = total / norm
    j = 0
    cdf = w[0]
    s = 0.0
    for k in range(M):
        s += exponentials[k]
        u = s * scale
        while u >= cdf and j < last:
            j += 1
            cdf += w[j]
        out[k] = j


@njit(cache=True)
def _fapf_kernel(y, phi, sigma_v, sigma_e, x0, normals, spacings):
    T = y.shape[0]
    N = normals.shape[1]
    particles = np.empty((T + 1, N))
    logw = np.zeros((T + 1, N))
    w = np.empty((T + 1, N))
    anc = np.empty((T + 1, N), dtype=np.int64)
    est = np.empty(T + 1)

    for i in range(N):
        particles[0, i] = x0
        anc[0, i] = i
    est[0] = x0

    prop_var = 1.0 / (1.0 / sigma_v**2 + 1.0 / sigma_e**2)
    prop_sd = math.sqrt(prop_var)
    pred_var = sigma_v**2 + sigma_e**2
    log_norm = _LOG_2PI + math.log(pred_var)
    loglik = 0.0

    for t in range(T):
        for i in range(N):
            r = y[t] - phi * particles[t, i]
            logw[t, i] = -0.5 * (log_norm + r * r / pred_var)
        vmax, total = _normalize_row(logw[t], w[t])
        if total == 0.0:
            return particles, logw, w, anc, est, loglik, t + 1
        loglik += vmax + math.log(total) - math.log(N)

        _inverse_cdf(w[t], spacings[t], anc[t + 1])
        s = 0.0
        for i in range(N):
            j = anc[t + 1, i]
            mean = prop_var * (y[t] / sigma_e**2 + phi * particles[t, j] / sigma_v**2)
            particles[t + 1, i] = mean + prop_sd * normals[t, i]
            s += particles[t + 1, i]
        est[t + 1] = s / N

    for i in range(N):
        logw[T, i] = 0.0
        w[T, i] = 1.0 / N
    return particles, logw, w, anc, est, loglik, 0


@njit(cache=True)
def _bootstrap_kernel(y, intercept, phi, sigma_v, obs_kind, obs_scale, init, normals, spacings):
    T = y.shape[0]
    N = init.shape[0]
    particles = np.empty((T + 1, N))
    logw = np.zeros((T + 1, N))
    w = np.empty((T + 1, N))
    anc = np.empty((T + 1, N), dtype=np.int64)
    est = np.empty(T + 1)

    s = 0.0
    for i in range(N):
        particles[0, i] = init[i]
        anc[0, i] = i
        w[0, i] = 1.0 / N
        s += init[i]
    est[0] = s / N
    log_scale2 = math.log(obs_scale * obs_scale) if obs_kind == 0 else 0.0
    loglik = 0.0

    for t in range(1, T + 1):
        _inverse_cdf(w[t - 1], spacings[t - 1], anc[t])
        yt = y[t - 1]
        for i in range(N):
            x = intercept + phi * particles[t - 1, anc[t, i]] + sigma_v * normals[t - 1, i]
            particles[t, i] = x
            if obs_kind == 0:
                r = yt - x
                logw[t, i] = -0.5 * (_LOG_2PI + log_scale2 + r * r / (obs_scale * obs_scale))
            else:
                logw[t, i] = -0.5 * (_LOG_2PI + x + yt * yt * math.exp(-x))
        vmax, total = _normalize_row(logw[t], w[t])
        if total == 0.0:
            return particles, logw, w, anc, est, loglik, t
        loglik += vmax + math.log(total) - math.log(N)
        s = 0.0
        for i in range(N):
            s += w[t, i] * particles[t, i]
        est[t] = s
    return particles, logw, w, anc, est, loglik, 0


# -- public filters ------------------------------------------------------------


def _observations(y):
    if isinstance(y, TimeSeries):
        return y.observations
    return np.ascontiguousarray(y, dtype=float)


def _finish(result, rng, sample):
    particles, logw, w, anc, est, loglik, status = result
    if status:
        raise DegeneracyError(f"particle weights degenerate at time {status}", step=int(status))
    # kernels work time-major for locality; expose the N x (T + 1) views
    system = ParticleSystem(particles.T, logw.T, w.T, anc.T)
    trajectory = sample_trajectory(system, rng) if sample else None
    return FilterOutput(est, float(loglik), trajectory, system)


def fapf_lgss(y, params: LgssParameters, N: int, x0: float = None, rng=None,
              sample_path: bool = False) -> FilterOutput:
    """Fully adapted particle filter for the LGSS model.

    The state estimate is the plain particle average: after full adaptation
    the particles at each time are equally weighted.
    """
    params.check()
    if N < 1:
        raise ValueError("N must be at least 1")
    obs = _observations(y)
    if x0 is None:
        x0 = y.initial_state if isinstance(y, TimeSeries) else 0.0
    rng = np.random.default_rng(rng)
    T = obs.size
    normals = rng.standard_normal((T, N))
    spacings = rng.standard_exponential((T, N + 1))
    result = _fapf_kernel(obs, params.phi, params.sigma_v, params.sigma_e, float(x0),
                          normals, spacings)
    return _finish(result, rng, sample_path)


def bpf_lgss(y, params: LgssParameters, N: int, x0: float = None, rng=None,
             sample_path: bool = False) -> FilterOutput:
    """Bootstrap filter on the LGSS model; used as a baseline for the adapted filter."""
    params.check()
    if N < 1:
        raise ValueError("N must be at least 1")
    obs = _observations(y)
    if x0 is None:
        x0 = y.initial_state if isinstance(y, TimeSeries) else 0.0
    rng = np.random.default_rng(rng)
    T = obs.size
    init = np.full(N, float(x0))
    normals = rng.standard_normal((T, N))
    spacings = rng.standard_exponential((T, N + 1))
    result = _bootstrap_kernel(obs, 0.0, params.phi, params.sigma_v, _OBS_LINEAR,
                               params.sigma_e, init, normals, spacings)
    return _finish(result, rng, sample_path)


def bpf_sv(y, params: SvParameters, N: int, rng=None, sample_path: bool = True) -> FilterOutput:
    """Bootstrap filter for the SV model with a weighted-mean state estimate."""
    params.check()
    if N < 1:
        raise ValueError("N must be at least 1")
    obs = _observations(y)
    rng = np.random.default_rng(rng)
    T = obs.size
    init = params.mu + math.sqrt(params.stationary_variance) * rng.standard_normal(N)
    normals = rng.standard_normal((T, N))
    spacings = rng.standard_exponential((T, N + 1))
    result = _bootstrap_kernel(obs, params.mu * (1.0 - params.phi), params.phi, params.sigma_v,
                               _OBS_VOLATILITY, 1.0, init, normals, spacings)
    return _finish(result, rng, sample_path)


def sample_trajectory(system: ParticleSystem, rng=None) -> np.ndarray:
    """Pick a final particle with probability w_T and trace its ancestry back to t = 0."""
    w = system.normalized_weights[:, -1]
    rng = np.random.default_rng(rng)
    j = multinomial_resample(w, rng, size=1)[0]
    return system.path(j)
