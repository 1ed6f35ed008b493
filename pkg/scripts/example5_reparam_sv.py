"""As example 4, but the random walk runs on (mu, atanh(phi), log(sigma_v))."""

from _run import run

run(["tune-proposal", "--reparam", "--out", "results/example5"])
