"""Exact scalar Kalman filter for the LGSS model (reference for the particle filters)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import LOG_2PI, LgssParameters, TimeSeries


@dataclass(frozen=True)
class KalmanOutput:
    filtered_means: np.ndarray
    filtered_variances: np.ndarray
    log_likelihood: float


def kalman_filter(y: TimeSeries, params: LgssParameters, x0: float = None) -> KalmanOutput:
    """Filter y_1..y_T starting from the point mass x_0 = x0.

    ``x0`` defaults to ``y.initial_state``.
    """
    params.check()
    obs = y.observations if isinstance(y, TimeSeries) else np.asarray(y, dtype=float)
    if x0 is None:
        x0 = y.initial_state if isinstance(y, TimeSeries) else 0.0
    phi, q, r = params.phi, params.sigma_v**2, params.sigma_e**2

    T = obs.size
    means = np.empty(T)
    variances = np.empty(T)
    m, p = float(x0), 0.0
    loglik = 0.0
    for t in range(T):
        m_pred = phi * m
        p_pred = phi * phi * p + q
        s = p_pred + r
        innov = obs[t] - m_pred
        loglik += -0.5 * (LOG_2PI + math.log(s) + innov * innov / s)
        gain = p_pred / s
        m = m_pred + gain * innov
        # (1 - gain) * p_pred, written so it cannot go negative as r -> 0
        p = p_pred * r / s
        means[t] = m
        variances[t] = p
    return KalmanOutput(means, variances, loglik)
