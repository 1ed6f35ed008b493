"""Particle Metropolis-Hastings with Gaussian random-walk proposals.

The particle filter's likelihood estimate is plugged into the usual MH ratio.
Each candidate is filtered with a freshly spawned random stream (an
independent proposal for the filter's auxiliary randomness), and the
accepted estimate is carried forward unchanged until the next acceptance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import ConfigurationError, DegeneracyError, DiagnosticsError, InitializationError
from .kalman import kalman_filter
from .models import (
    LgssParameters,
    SvParameters,
    TimeSeries,
    UnconstrainedSvParameters,
    from_unconstrained,
    log_jacobian,
    log_prior_lgss,
    log_prior_sv,
    to_unconstrained,
)
from .particle_filter import bpf_sv, fapf_lgss

SCALE_CONSTANT = 2.562


@dataclass
class ProposalConfig:
    """Random-walk proposal.

    ``kind`` is ``"scalar_random_walk"`` (increment N(0, step_size^2)) or
    ``"multivariate_random_walk"`` (increment N(0, covariance)). With
    ``scale_rule`` the supplied covariance is treated as a pre-conditioner and
    multiplied by 2.562^2 / d.
    """

    kind: str = "scalar_random_walk"
    step_size: float = 0.1
    covariance: Optional[np.ndarray] = None
    scale_rule: bool = False
    reparametrized: bool = False
    _chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind == "scalar_random_walk":
            if not (self.step_size >= 0 and math.isfinite(self.step_size)):
                raise ConfigurationError(f"step_size must be >= 0, got {self.step_size}")
            self._chol = np.array([[float(self.step_size)]])
        elif self.kind == "multivariate_random_walk":
            if self.covariance is None:
                raise ConfigurationError("multivariate proposal needs a covariance matrix")
            cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
            if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
                raise ConfigurationError(f"covariance must be square, got shape {cov.shape}")
            if not np.all(np.isfinite(cov)):
                raise ConfigurationError("covariance has non-finite entries")
            if np.max(np.abs(cov - cov.T)) > 1e-12:
                raise ConfigurationError("covariance is not symmetric")
            if np.min(np.linalg.eigvalsh(cov)) <= 0:
                raise ConfigurationError("covariance is not positive definite")
            self.covariance = cov
            self._chol = np.linalg.cholesky(self.effective_covariance)
        else:
            raise ConfigurationError(f"unknown proposal kind {self.kind!r}")

    @classmethod
    def diagonal(cls, step_sizes: Sequence[float], reparametrized=False) -> "ProposalConfig":
        """Independent increments with the given standard deviations."""
        sd = np.asarray(step_sizes, dtype=float)
        return cls(kind="multivariate_random_walk", covariance=np.diag(sd**2),
                   reparametrized=reparametrized)

    @classmethod
    def preconditioned(cls, preconditioner, reparametrized=False) -> "ProposalConfig":
        return cls(kind="multivariate_random_walk", covariance=preconditioner, scale_rule=True,
                   reparametrized=reparametrized)

    @property
    def dimension(self) -> int:
        return self._chol.shape[0]

    @property
    def effective_covariance(self) -> np.ndarray:
        if self.kind == "scalar_random_walk":
            return np.array([[self.step_size**2]])
        cov = self.covariance
        if self.scale_rule:
            cov = SCALE_CONSTANT**2 / cov.shape[0] * cov
        return cov


def propose(current, config: ProposalConfig, rng) -> np.ndarray:
    """current + increment; ``current`` is a parameter vector of length ``config.dimension``."""
    current = np.atleast_1d(np.asarray(current, dtype=float))
    if current.shape != (config.dimension,):
        raise ConfigurationError(
            f"proposal has dimension {config.dimension}, parameters have {current.size}"
        )
    z = rng.standard_normal(config.dimension)
    return current + config._chol @ z


def log_acceptance_ratio(candidate, current, cand_loglik: float, curr_loglik: float,
                         log_prior: Callable, jacobian_correction: float = 0.0) -> float:
    """log of prior ratio x likelihood ratio (x Jacobian ratio) for a symmetric proposal.

    Returns -inf, never raises, when the candidate is outside the prior's
    support or its likelihood estimate is missing.
    """
    lp_cand = float(log_prior(candidate))
    if not lp_cand > -math.inf:
        return -math.inf
    if cand_loglik is None or math.isnan(cand_loglik) or cand_loglik == -math.inf:
        return -math.inf
    # plain floats: overflow to inf / nan without numpy warnings
    ratio = (lp_cand - float(log_prior(current)) + float(cand_loglik) - float(curr_loglik)
             + float(jacobian_correction))
    return -math.inf if math.isnan(ratio) else ratio


def acceptance_probability(log_ratio: float) -> float:
    if math.isnan(log_ratio):
        return 0.0
    return math.exp(min(0.0, log_ratio))


@dataclass
class ChainConfig:
    iterations: int
    burn_in: int
    particles: int
    initial_parameters: Sequence[float]
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigurationError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ConfigurationError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.particles < 1:
            raise ConfigurationError("particles must be at least 1")
        self.initial_parameters = np.atleast_1d(np.asarray(self.initial_parameters, dtype=float))


@dataclass
class ChainTrace:
    """Output of one chain. Row 0 is the initial point, marked as accepted."""

    names: tuple
    parameters: np.ndarray
    log_likelihoods: np.ndarray
    accepted: np.ndarray
    state_trajectories: Optional[np.ndarray] = None

    def __len__(self):
        return self.parameters.shape[0]

    @property
    def acceptance_rate(self) -> float:
        if len(self) < 2:
            return float("nan")
        return float(np.mean(self.accepted[1:]))

    def stationary(self, burn_in: int) -> np.ndarray:
        return self.parameters[burn_in:]


def _spawn_rng(seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seq.spawn(1)[0]))


def _run_chain(start, config: ChainConfig, proposal: ProposalConfig, *, names, to_model,
               record, log_prior, estimate, jacobian=None, keep_paths=False) -> ChainTrace:
    """Generic pseudo-marginal MH loop.

    The chain walks on vectors; ``to_model`` maps a vector to a model bundle,
    ``record`` maps a bundle to the stored row, and ``estimate(bundle, rng)``
    returns ``(loglik, path_or_None)``.
    """
    K = config.iterations
    root = np.random.SeedSequence(config.seed)
    walk_seq, filter_seq = root.spawn(2)
    walk_rng = np.random.Generator(np.random.PCG64(walk_seq))

    current = np.atleast_1d(np.asarray(start, dtype=float))
    model = to_model(current)
    if not model.is_valid() or not log_prior(model) > -math.inf:
        raise InitializationError(f"initial parameters {model} are outside the prior support")
    try:
        loglik, path = estimate(model, _spawn_rng(filter_seq))
    except DegeneracyError as exc:
        raise InitializationError(f"particle filter degenerate at initial parameters: {exc}") from exc
    if not math.isfinite(loglik):
        raise InitializationError("non-finite log-likelihood at the initial parameters")

    first = np.asarray(record(model), dtype=float)
    params = np.empty((K, first.size))
    logliks = np.empty(K)
    accepted = np.zeros(K, dtype=bool)
    paths = None
    if keep_paths:
        paths = np.empty((K, path.size))
        paths[0] = path
    params[0] = first
    logliks[0] = loglik
    accepted[0] = True

    for k in range(1, K):
        cand = propose(current, proposal, walk_rng)
        cand_model = to_model(cand)
        cand_loglik, cand_path = -math.inf, None
        if cand_model.is_valid():
            try:
                cand_loglik, cand_path = estimate(cand_model, _spawn_rng(filter_seq))
            except DegeneracyError:
                cand_loglik = -math.inf
        jac = 0.0
        if jacobian is not None and cand_model.is_valid():
            jac = jacobian(cand_model) - jacobian(model)
        ratio = log_acceptance_ratio(cand_model, model, cand_loglik, loglik, log_prior, jac)
        u = walk_rng.random()
        if u < acceptance_probability(ratio):
            current, model, loglik = cand, cand_model, cand_loglik
            params[k] = record(model)
            accepted[k] = True
            if keep_paths:
                paths[k] = cand_path
        else:
            params[k] = params[k - 1]
            if keep_paths:
                paths[k] = paths[k - 1]
        logliks[k] = loglik
    return ChainTrace(tuple(names), params, logliks, accepted, paths)


def run_pmh_lgss(y: TimeSeries, config: ChainConfig, proposal: ProposalConfig,
                 sigma_v: float, sigma_e: float, x0: float = None,
                 prior_mean: float = 0.0, prior_variance: float = 0.5) -> ChainTrace:
    """PMH over phi with sigma_v and sigma_e held fixed, using the fully adapted filter."""
    if proposal.dimension != 1:
        raise ConfigurationError("the LGSS chain samples phi only; use a 1-D proposal")
    if x0 is None:
        x0 = y.initial_state
    N = config.particles

    def estimate(params, rng):
        return fapf_lgss(y, params, N, x0=x0, rng=rng).log_likelihood, None

    return _run_lgss(y, config, proposal, sigma_v, sigma_e, estimate, prior_mean, prior_variance)


def run_mh_lgss_kalman(y: TimeSeries, config: ChainConfig, proposal: ProposalConfig,
                       sigma_v: float, sigma_e: float, x0: float = None,
                       prior_mean: float = 0.0, prior_variance: float = 0.5) -> ChainTrace:
    """Plain MH with the exact Kalman likelihood; the reference for :func:`run_pmh_lgss`."""
    if x0 is None:
        x0 = y.initial_state

    def estimate(params, rng):
        return kalman_filter(y, params, x0).log_likelihood, None

    return _run_lgss(y, config, proposal, sigma_v, sigma_e, estimate, prior_mean, prior_variance)


def _run_lgss(y, config, proposal, sigma_v, sigma_e, estimate, prior_mean, prior_variance):
    return _run_chain(
        config.initial_parameters[:1], config, proposal,
        names=("phi",),
        to_model=lambda v: LgssParameters(float(v[0]), sigma_v, sigma_e),
        record=lambda p: (p.phi,),
        log_prior=lambda p: log_prior_lgss(p.phi, prior_mean, prior_variance),
        estimate=estimate,
    )


def run_pmh_sv(y: TimeSeries, config: ChainConfig, proposal: ProposalConfig,
               store_trajectories: bool = True) -> ChainTrace:
    """PMH over (mu, phi, sigma_v) with the bootstrap filter.

    With ``proposal.reparametrized`` the walk happens on (mu, atanh(phi),
    log(sigma_v)) and the stored rows are mapped back to (mu, phi, sigma_v).
    """
    if proposal.dimension != 3:
        raise ConfigurationError("the SV chain needs a 3-dimensional proposal")
    N = config.particles
    theta0 = SvParameters.from_array(config.initial_parameters)

    def estimate(params, rng):
        out = bpf_sv(y, params, N, rng=rng, sample_path=store_trajectories)
        return out.log_likelihood, out.sampled_trajectory

    common = dict(names=SvParameters.names, record=lambda p: p.as_array(), log_prior=log_prior_sv,
                  estimate=estimate, keep_paths=store_trajectories)
    if proposal.reparametrized:
        return _run_chain(
            to_unconstrained(theta0).as_array(), config, proposal,
            to_model=lambda v: from_unconstrained(UnconstrainedSvParameters.from_array(v)),
            jacobian=log_jacobian, **common,
        )
    return _run_chain(theta0.as_array(), config, proposal, to_model=SvParameters.from_array,
                      **common)


def estimate_preconditioner(trace, burn_in: int) -> np.ndarray:
    """Sample covariance of the post-burn-in rows of a pilot chain.

    ``trace`` is a :class:`ChainTrace` or a K x p array. Eigenvalues below
    1e-10 * trace(P) are lifted by adding that floor to the diagonal.
    """
    rows = trace.parameters if isinstance(trace, ChainTrace) else np.asarray(trace, dtype=float)
    rows = np.atleast_2d(rows.T).T
    p = rows.shape[1]
    if rows.shape[0] <= burn_in + p + 1:
        raise DiagnosticsError(
            f"need more than burn_in + p + 1 = {burn_in + p + 1} rows, got {rows.shape[0]}"
        )
    kept = rows[burn_in:]
    if np.all(kept == kept[0]):
        raise DiagnosticsError("pilot chain is constant after burn-in")
    cov = np.atleast_2d(np.cov(kept, rowvar=False))
    cov = 0.5 * (cov + cov.T)
    floor = 1e-10 * np.trace(cov)
    if np.min(np.linalg.eigvalsh(cov)) < floor:
        cov = cov + floor * np.eye(p)
    return cov


def unconstrained_rows(rows) -> np.ndarray:
    """Map (mu, phi, sigma_v) rows to (mu, atanh(phi), log(sigma_v))."""
    rows = np.asarray(rows, dtype=float)
    return np.column_stack([rows[:, 0], np.arctanh(rows[:, 1]), np.log(rows[:, 2])])
