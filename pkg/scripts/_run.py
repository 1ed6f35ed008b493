"""Shared helper: forward a preset argument list (plus any extra CLI flags) to the CLI."""

import sys

from ssm_pmh.cli import main


def run(preset):
    sys.exit(main([*preset, *sys.argv[1:]]))
