"""Experiment drivers behind the command-line interface.

Each experiment reads its data (bundled reference data by default), runs,
and writes plot-ready CSV files plus a ``summary.txt`` into ``config.out``.
Outputs depend only on the configuration and seed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import io
from .diagnostics import ks_stationarity_test, loglik_std_study, mixing_report, posterior_summary, state_error_metrics
from .exceptions import ConfigurationError
from .kalman import kalman_filter
from .models import LgssParameters, SvParameters, simulate_lgss, simulate_sv
from .particle_filter import fapf_lgss
from .pmh import (
    ChainConfig,
    ProposalConfig,
    estimate_preconditioner,
    run_pmh_lgss,
    run_pmh_sv,
    unconstrained_rows,
)

log = logging.getLogger(__name__)

EXPERIMENTS = ("generate-data", "filter-lgss", "pmh-lgss", "pmh-sv", "tune-proposal", "n-study",
               "diagnose")

LGSS_DATA = "lgss_T250.csv"
SV_DATA = "sv_T500.csv"
LGSS_TRUE = (0.75, 1.0, 0.1)
SV_TRUE = (0.0, 0.9, 0.2)
# random-walk standard deviations of the untuned SV proposal
SV_NAIVE_STEPS = (0.10, 0.01, 0.05)

DEFAULTS = {
    "generate-data": dict(model="lgss", seed=0),
    "filter-lgss": dict(particles=[10, 20, 50, 100, 200, 500, 1000]),
    "pmh-lgss": dict(particles=[100], iterations=5000, burn_in=1000, step_size=[0.10],
                     initial=[0.5], parameters=list(LGSS_TRUE)),
    "pmh-sv": dict(particles=[500], iterations=7500, burn_in=2500,
                   step_size=list(SV_NAIVE_STEPS), initial=list(SV_TRUE)),
    "tune-proposal": dict(particles=[500], iterations=7500, burn_in=2500,
                          step_size=list(SV_NAIVE_STEPS), initial=list(SV_TRUE)),
    "n-study": dict(model="sv", particles=[50, 100, 200, 300, 400, 500], runs=1000,
                    iterations=0, burn_in=0, lags=250),
    "diagnose": dict(burn_in=0),
}


@dataclass
class ExperimentConfig:
    """Flat configuration; ``None`` fields take the experiment's defaults."""

    experiment: str
    out: Path = Path("results")
    data: Optional[Path] = None
    model: Optional[str] = None
    particles: Optional[list] = None
    iterations: Optional[int] = None
    burn_in: Optional[int] = None
    step_size: Optional[list] = None
    covariance: Optional[Path] = None
    reparametrized: bool = False
    seed: int = 0
    lags: int = 100
    initial: Optional[list] = None
    parameters: Optional[list] = None
    length: Optional[int] = None
    runs: Optional[int] = None
    alpha: float = 0.05

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"experiment: unknown id {self.experiment!r}")
        for key, value in DEFAULTS[self.experiment].items():
            if getattr(self, key) is None:
                setattr(self, key, value)
        self.out = Path(self.out)
        self._validate()

    def _validate(self):
        for name in ("iterations", "runs", "length"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ConfigurationError(f"{name}: must be non-negative, got {value}")
        if self.particles is not None and any(int(n) < 1 for n in self.particles):
            raise ConfigurationError(f"particles: all values must be >= 1, got {self.particles}")
        if self.step_size is not None and any(s < 0 for s in self.step_size):
            raise ConfigurationError(f"step_size: must be >= 0, got {self.step_size}")
        if self.lags < 1:
            raise ConfigurationError(f"lags: must be positive, got {self.lags}")
        if not 0 < self.alpha < 1:
            raise ConfigurationError(f"alpha: must lie in (0, 1), got {self.alpha}")
        if self.model is not None and self.model not in ("lgss", "sv"):
            raise ConfigurationError(f"model: expected 'lgss' or 'sv', got {self.model!r}")
        if self.iterations and self.burn_in is not None and not 0 <= self.burn_in < self.iterations:
            raise ConfigurationError(
                f"burn_in: must satisfy 0 <= burn_in < iterations ({self.burn_in}, {self.iterations})"
            )
        for name in ("data", "covariance"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise ConfigurationError(f"{name}: file not found: {path}")

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        """Flat JSON object of field values; ``overrides`` that are not None win."""
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"{sorted(unknown)[0]}: unknown configuration key")
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**raw)

    @property
    def N(self) -> int:
        return int(self.particles[0])


def run_experiment(config: ExperimentConfig) -> dict:
    """Run one experiment, write its files, and return the summary values."""
    if config.experiment != "generate-data":
        config.out.mkdir(parents=True, exist_ok=True)
    runner = {
        "generate-data": _generate_data,
        "filter-lgss": _filter_lgss,
        "pmh-lgss": _pmh_lgss,
        "pmh-sv": _pmh_sv,
        "tune-proposal": _tune_proposal,
        "n-study": _n_study,
        "diagnose": _diagnose,
    }[config.experiment]
    summary = runner(config)
    if config.experiment != "generate-data":
        io.write_summary(summary, config.out / "summary.txt")
    return summary


def generate_reference_data(kind: str, params=None, T: int = None, seed: int = 0, path=None,
                            x0: float = 0.0):
    """Simulate a dataset and write it as ``t,x,y`` CSV; returns the TimeSeries."""
    if kind == "lgss":
        p = LgssParameters(*(params or LGSS_TRUE))
        series = simulate_lgss(p, T or 250, x0, np.random.default_rng(seed))
    elif kind == "sv":
        p = SvParameters(*(params or SV_TRUE))
        series = simulate_sv(p, T or 500, np.random.default_rng(seed))
    else:
        raise ConfigurationError(f"model: expected 'lgss' or 'sv', got {kind!r}")
    if path is not None:
        io.write_series(series, path)
    return series


def _load(config, default_name):
    path = config.data if config.data is not None else io.bundled_path(default_name)
    return io.load_data(path)


def _generate_data(config):
    out = config.out
    if out.suffix.lower() != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / f"{config.model}.csv"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    series = generate_reference_data(config.model, config.parameters, config.length, config.seed, out)
    log.info("wrote %d observations to %s", series.T, out)
    return {"path": str(out), "T": series.T}


def _filter_lgss(config):
    data = _load(config, LGSS_DATA)
    params = LgssParameters(*(config.parameters or LGSS_TRUE))
    kf = kalman_filter(data, params)
    seeds = np.random.SeedSequence(config.seed).spawn(len(config.particles))
    columns, rows, summary = {}, [], {"kalman_loglik": kf.log_likelihood}
    for N, seq in zip(config.particles, seeds):
        out = fapf_lgss(data, params, int(N), rng=np.random.default_rng(seq))
        log_bias, log_mse = state_error_metrics(out.state_estimates[1:], kf.filtered_means)
        rows.append((int(N), log_bias, log_mse, out.log_likelihood))
        columns[f"pf_{N}"] = out.state_estimates[1:]
        summary[f"N{N}"] = [log_bias, log_mse, out.log_likelihood]
    io.write_table(config.out / "state_errors.csv", ["particles", "log_bias", "log_mse", "loglik"], rows)
    header = ["t", "kalman", *columns]
    state_rows = [(t + 1, kf.filtered_means[t], *(c[t] for c in columns.values()))
                  for t in range(data.T)]
    io.write_table(config.out / "states.csv", header, state_rows)
    return summary


def _chain_summary(trace, config):
    post = posterior_summary(trace, config.burn_in)
    mix = mixing_report(trace, config.burn_in, config.lags)
    return {
        "parameters": ",".join(trace.names),
        "mean": post.mean,
        "std": post.std,
        "variance": post.variance,
        "ci_lower": post.credible_interval_95[:, 0],
        "ci_upper": post.credible_interval_95[:, 1],
        "iact": mix.iact,
        "max_iact": float(np.max(mix.iact)),
        "acceptance_rate": trace.acceptance_rate,
        "iterations": config.iterations,
        "burn_in": config.burn_in,
        "particles": config.N if config.particles else "",
        "seed": config.seed,
        "lags": config.lags,
    }


def _pmh_lgss(config):
    data = _load(config, LGSS_DATA)
    _, sigma_v, sigma_e = config.parameters
    chain = ChainConfig(config.iterations, config.burn_in, config.N, config.initial[:1], config.seed)
    trace = run_pmh_lgss(data, chain, ProposalConfig(step_size=float(config.step_size[0])),
                         sigma_v, sigma_e)
    io.write_trace(trace, config.out / "trace.csv")
    return _chain_summary(trace, config)


def _sv_proposal(config, reparametrized):
    if config.covariance is not None:
        return ProposalConfig.preconditioned(io.read_matrix(config.covariance), reparametrized)
    if len(config.step_size) != 3:
        raise ConfigurationError(f"step_size: SV needs three values, got {config.step_size}")
    return ProposalConfig.diagonal(config.step_size, reparametrized)


def _write_sv_outputs(trace, config, prefix=""):
    io.write_trace(trace, config.out / f"{prefix}trace.csv")
    if trace.state_trajectories is not None:
        kept = trace.state_trajectories[config.burn_in:]
        rows = [(t, m, s) for t, (m, s) in enumerate(zip(kept.mean(axis=0), kept.std(axis=0)))]
        io.write_table(config.out / f"{prefix}volatility.csv", ["t", "mean", "std"], rows)


def _pmh_sv(config):
    data = _load(config, SV_DATA)
    chain = ChainConfig(config.iterations, config.burn_in, config.N, config.initial, config.seed)
    trace = run_pmh_sv(data, chain, _sv_proposal(config, config.reparametrized))
    _write_sv_outputs(trace, config)
    summary = _chain_summary(trace, config)
    summary["reparametrized"] = int(config.reparametrized)
    return summary


def _tune_proposal(config):
    """Pilot run with the untuned proposal, then a run with the fitted pre-conditioner."""
    data = _load(config, SV_DATA)
    seeds = np.random.SeedSequence(config.seed).generate_state(2)
    pilot_cfg = ChainConfig(config.iterations, config.burn_in, config.N, config.initial, int(seeds[0]))
    pilot = run_pmh_sv(data, pilot_cfg, _sv_proposal(config, False), store_trajectories=False)
    io.write_trace(pilot, config.out / "pilot_trace.csv")

    rows = unconstrained_rows(pilot.parameters) if config.reparametrized else pilot.parameters
    precond = estimate_preconditioner(rows, config.burn_in)
    io.write_matrix(precond, config.out / "covariance.csv")

    start = posterior_summary(pilot, config.burn_in).mean
    tuned_cfg = ChainConfig(config.iterations, config.burn_in, config.N, start, int(seeds[1]))
    tuned = run_pmh_sv(data, tuned_cfg, ProposalConfig.preconditioned(precond, config.reparametrized))
    _write_sv_outputs(tuned, config)

    summary = _chain_summary(tuned, config)
    pilot_mix = mixing_report(pilot, config.burn_in, config.lags)
    summary["pilot_iact"] = pilot_mix.iact
    summary["pilot_max_iact"] = float(np.max(pilot_mix.iact))
    summary["pilot_acceptance_rate"] = pilot.acceptance_rate
    summary["reparametrized"] = int(config.reparametrized)
    return summary


def _n_study(config):
    if config.model == "lgss":
        data = _load(config, LGSS_DATA)
        params = LgssParameters(*(config.parameters or LGSS_TRUE))
    else:
        data = _load(config, SV_DATA)
        params = SvParameters(*(config.parameters or SV_TRUE))
    table = loglik_std_study(data, params, config.particles, config.runs, config.seed)
    header = ["particles", "std_loglik", "runs_ok", "runs_failed"]
    rows = [[r.particles, r.std_loglik, r.runs_ok, r.runs_failed] for r in table]
    for r in table:
        log.info("N=%d: std %.3f (%.4f s per filter run)", r.particles, r.std_loglik,
                 r.seconds_per_run)

    if config.iterations:
        if config.model != "sv":
            raise ConfigurationError("model: the PMH part of the N-study is for the SV model")
        if config.covariance is None:
            raise ConfigurationError("covariance: the PMH part of the N-study needs --covariance")
        proposal = ProposalConfig.preconditioned(io.read_matrix(config.covariance))
        header += ["acceptance_rate", "max_iact"]
        for row, N in zip(rows, config.particles):
            chain = ChainConfig(config.iterations, config.burn_in, int(N), params.as_array(),
                                config.seed)
            trace = run_pmh_sv(data, chain, proposal, store_trajectories=False)
            mix = mixing_report(trace, config.burn_in, config.lags)
            row += [trace.acceptance_rate, float(np.max(mix.iact))]
    io.write_table(config.out / "nstudy.csv", header, rows)
    return {"particles": [r[0] for r in rows], "std_loglik": [r[1] for r in rows],
            "runs": config.runs, "seed": config.seed}


def _diagnose(config):
    if config.data is None:
        raise ConfigurationError("data: diagnose needs a trace file via --data")
    trace = io.read_trace(config.data)
    if config.burn_in >= len(trace):
        raise ConfigurationError(f"burn_in: {config.burn_in} >= trace length {len(trace)}")
    summary = {"iterations": len(trace), "burn_in": config.burn_in}
    summary.update({k: v for k, v in _chain_summary(trace, config).items()
                    if k not in ("iterations", "burn_in", "particles", "seed")})
    stats, passed, lags = [], [], []
    for j in range(trace.parameters.shape[1]):
        try:
            ks = ks_stationarity_test(trace.parameters[:, j], config.burn_in, alpha=config.alpha)
        except Exception as exc:  # too-short or constant columns are reported, not fatal
            log.warning("KS test skipped for %s: %s", trace.names[j], exc)
            stats.append(float("nan"))
            passed.append(False)
            lags.append(0)
            continue
        stats.append(ks.statistic)
        passed.append(ks.passed)
        lags.append(ks.thinning_lag)
    summary["ks_statistic"] = stats
    summary["ks_passed"] = [int(p) for p in passed]
    summary["ks_thinning_lag"] = lags
    return summary
