"""Spectral long-range dependence testing for functional time series on the sphere."""

__version__ = "0.1.0"
