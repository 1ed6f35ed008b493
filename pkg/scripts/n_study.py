"""Spread of the log-likelihood estimate against N for the SV model.

Add ``--iterations 7500 --burnin 2500 --covariance results/example4/covariance.csv``
to also record acceptance rate and max IACT of a PMH chain for each N.
"""

from _run import run

run(["n-study", "--out", "results/n_study"])
