"""PMH for phi in the LGSS model (step 0.1, K=5000, burn-in 1000, N=100)."""

from _run import run

run(["pmh-lgss", "--out", "results/example2"])
