"""Pilot run, covariance estimate, and a second run with the pre-conditioned proposal.

Compare ``pilot_iact`` and ``iact`` in results/example4/summary.txt.
"""

from _run import run

run(["tune-proposal", "--out", "results/example4"])
