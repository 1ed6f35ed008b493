"""PMH for (mu, phi, sigma_v) in the SV model with the untuned diagonal proposal.

Uses the bundled synthetic series unless ``--data`` points to a price CSV.
"""

from _run import run

run(["pmh-sv", "--out", "results/example3"])
