"""Bayesian variable selection via penalized credible regions."""

__version__ = "0.1.0"
