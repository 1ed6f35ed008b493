"""Particle filtering and particle Metropolis-Hastings for scalar state-space models."""

__version__ = "0.1.0"
