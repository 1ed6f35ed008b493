"""Linear Gaussian (LGSS) and stochastic volatility (SV) state-space models.

Both models are scalar:

LGSS::

    x_0 = x0,  x_t | x_{t-1} ~ N(phi * x_{t-1}, sigma_v^2),  y_t | x_t ~ N(x_t, sigma_e^2)

SV::

    x_0 ~ N(mu, sigma_v^2 / (1 - phi^2))
    x_t | x_{t-1} ~ N(mu + phi * (x_{t-1} - mu), sigma_v^2)
    y_t | x_t ~ N(0, exp(x_t))

Parameter bundles are plain floats plus an ``is_valid`` predicate, because the
sampler has to be able to represent (and reject) proposals outside the domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import InputError, ParameterDomainError

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LgssParameters:
    phi: float
    sigma_v: float
    sigma_e: float

    names = ("phi", "sigma_v", "sigma_e")

    def is_valid(self) -> bool:
        return abs(self.phi) < 1.0 and self.sigma_v > 0.0 and self.sigma_e > 0.0

    def check(self) -> "LgssParameters":
        if not self.is_valid():
            raise ParameterDomainError(
                f"LGSS parameters require |phi| < 1, sigma_v > 0, sigma_e > 0; got {self}"
            )
        return self

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.sigma_v, self.sigma_e])


@dataclass(frozen=True)
class SvParameters:
    mu: float
    phi: float
    sigma_v: float

    names = ("mu", "phi", "sigma_v")

    def is_valid(self) -> bool:
        return abs(self.phi) < 1.0 and self.sigma_v > 0.0 and math.isfinite(self.mu)

    def check(self) -> "SvParameters":
        if not self.is_valid():
            raise ParameterDomainError(
                f"SV parameters require |phi| < 1 and sigma_v > 0; got {self}"
            )
        return self

    def as_array(self) -> np.ndarray:
        return np.array([self.mu, self.phi, self.sigma_v])

    @classmethod
    def from_array(cls, values) -> "SvParameters":
        mu, phi, sigma_v = (float(v) for v in values)
        return cls(mu, phi, sigma_v)

    @property
    def stationary_variance(self) -> float:
        return self.sigma_v**2 / (1.0 - self.phi**2)


@dataclass(frozen=True)
class UnconstrainedSvParameters:
    """SV parameters on the real line: phi = tanh(psi), sigma_v = exp(varsigma)."""

    mu: float
    psi: float
    varsigma: float

    names = ("mu", "psi", "varsigma")

    def as_array(self) -> np.ndarray:
        return np.array([self.mu, self.psi, self.varsigma])

    @classmethod
    def from_array(cls, values) -> "UnconstrainedSvParameters":
        mu, psi, varsigma = (float(v) for v in values)
        return cls(mu, psi, varsigma)


@dataclass(frozen=True)
class TimeSeries:
    """Observations y_1..y_T, optionally with the latent path x_0..x_T."""

    observations: np.ndarray
    states: Optional[np.ndarray] = None
    initial_state: float = 0.0

    def __post_init__(self):
        y = np.asarray(self.observations, dtype=float)
        if y.ndim != 1 or y.size == 0:
            raise InputError("observations must be a non-empty 1-D sequence")
        object.__setattr__(self, "observations", y)
        if self.states is not None:
            x = np.asarray(self.states, dtype=float)
            if x.shape != (y.size + 1,):
                raise InputError(
                    f"latent states must have length T + 1 = {y.size + 1}, got {x.size}"
                )
            object.__setattr__(self, "states", x)

    def __len__(self):
        return self.observations.size

    @property
    def T(self) -> int:
        return self.observations.size

    def head(self, T: int) -> "TimeSeries":
        """The first T observations (and T + 1 states)."""
        states = None if self.states is None else self.states[: T + 1]
        return TimeSeries(self.observations[:T], states, self.initial_state)


def simulate_lgss(params: LgssParameters, T: int, x0: float = 0.0, rng=None) -> TimeSeries:
    params.check()
    if T < 1:
        raise ValueError("T must be at least 1")
    rng = np.random.default_rng(rng)
    v = rng.standard_normal(T)
    e = rng.standard_normal(T)
    x = np.empty(T + 1)
    x[0] = x0
    for t in range(1, T + 1):
        x[t] = params.phi * x[t - 1] + params.sigma_v * v[t - 1]
    y = x[1:] + params.sigma_e * e
    return TimeSeries(y, x, float(x0))


def simulate_sv(params: SvParameters, T: int, rng=None) -> TimeSeries:
    params.check()
    if T < 1:
        raise ValueError("T must be at least 1")
    rng = np.random.default_rng(rng)
    x = np.empty(T + 1)
    x[0] = params.mu + math.sqrt(params.stationary_variance) * rng.standard_normal()
    v = rng.standard_normal(T)
    e = rng.standard_normal(T)
    for t in range(1, T + 1):
        x[t] = params.mu + params.phi * (x[t - 1] - params.mu) + params.sigma_v * v[t - 1]
    y = np.exp(x[1:] / 2.0) * e
    return TimeSeries(y, x, float(x[0]))


# -- priors -----------------------------------------------------------------
# Truncation constants are dropped everywhere; only differences of log priors
# are ever used.


def _log_normal(x, mean, variance):
    return -0.5 * (LOG_2PI + math.log(variance) + (x - mean) ** 2 / variance)


def log_prior_lgss(phi: float, mean: float = 0.0, variance: float = 0.5) -> float:
    """Log density of N(mean, variance) restricted to (-1, 1), unnormalised."""
    if not abs(phi) < 1.0:
        return -math.inf
    return _log_normal(phi, mean, variance)


def _log_gamma_rate(x, shape, rate):
    return shape * math.log(rate) - math.lgamma(shape) + (shape - 1.0) * math.log(x) - rate * x


def log_prior_sv(params: SvParameters) -> float:
    """N(0, 1) on mu, N(0.95, 0.05^2) on phi in (-1, 1), Gamma(shape=2, rate=10) on sigma_v."""
    if not params.is_valid():
        return -math.inf
    return (
        _log_normal(params.mu, 0.0, 1.0)
        + _log_normal(params.phi, 0.95, 0.05**2)
        + _log_gamma_rate(params.sigma_v, 2.0, 10.0)
    )


# -- reparametrisation ------------------------------------------------------


def to_unconstrained(params: SvParameters) -> UnconstrainedSvParameters:
    params.check()
    return UnconstrainedSvParameters(params.mu, math.atanh(params.phi), math.log(params.sigma_v))


def from_unconstrained(uparams: UnconstrainedSvParameters) -> SvParameters:
    return SvParameters(uparams.mu, math.tanh(uparams.psi), math.exp(uparams.varsigma))


def log_jacobian(params: SvParameters) -> float:
    """log |d(mu, phi, sigma_v) / d(mu, psi, varsigma)| at ``params``."""
    return math.log(abs(1.0 - params.phi**2)) + math.log(params.sigma_v)


def log_jacobian_correction(current: SvParameters, proposed: SvParameters) -> float:
    """Term added to the log acceptance ratio when the chain walks in (mu, psi, varsigma)."""
    return log_jacobian(proposed) - log_jacobian(current)
