"""State estimation in the LGSS model: fully adapted filter vs Kalman over a grid of N.

Writes state_errors.csv (log-bias / log-MSE per N) and states.csv. Extra flags are passed on,
e.g. ``python scripts/example1_filter_lgss.py --particles 10,100,1000 --seed 3``.
"""

from _run import run

run(["filter-lgss", "--out", "results/example1"])
