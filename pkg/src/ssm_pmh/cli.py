"""Command-line entry point: ``ssm-pmh <experiment> [flags]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .exceptions import SsmPmhError
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from .io import summary_text


def _list_of(kind, name):
    def parse(text):
        try:
            return [kind(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name}: expected comma-separated {kind.__name__} values, got {text!r}")
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssm-pmh", description="Particle filtering and particle MH experiments.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="flat JSON file of configuration fields; flags override it")
    parser.add_argument("--data", help="input CSV (t,x,y series, date,close prices, or a trace for diagnose)")
    parser.add_argument("--out", help="output directory (generate-data also accepts a .csv path)")
    parser.add_argument("--model", choices=("lgss", "sv"))
    parser.add_argument("--particles", type=_list_of(int, "particles"),
                        help="particle count; a comma list for filter-lgss and n-study")
    parser.add_argument("--iterations", type=int)
    parser.add_argument("--burnin", dest="burn_in", type=int)
    parser.add_argument("--step-size", dest="step_size", type=_list_of(float, "step-size"),
                        help="random-walk standard deviation(s), one per parameter")
    parser.add_argument("--covariance", help="CSV file with a pre-conditioning matrix")
    parser.add_argument("--reparam", dest="reparametrized", action="store_true", default=None,
                        help="random walk on (mu, atanh(phi), log(sigma_v))")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--lags", type=int, help="truncation lag for IACT estimates")
    parser.add_argument("--initial", type=_list_of(float, "initial"), help="initial parameter vector")
    parser.add_argument("--params", dest="parameters", type=_list_of(float, "params"),
                        help="model parameters for generate-data, filter-lgss, n-study; fixed noise scales for pmh-lgss")
    parser.add_argument("--length", type=int, help="number of observations for generate-data")
    parser.add_argument("--runs", type=int, help="filter runs per N in n-study")
    parser.add_argument("--alpha", type=float, help="KS test level for diagnose")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    values = {k: v for k, v in vars(args).items() if k not in ("config", "verbose") and v is not None}
    try:
        if args.config:
            config = ExperimentConfig.from_file(args.config, **values)
        else:
            config = ExperimentConfig(**values)
        summary = run_experiment(config)
    except (SsmPmhError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for key, value in summary.items():
        print(f"{key} = {summary_text(value)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
