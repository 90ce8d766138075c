"""Spherical mean transform on annuli via the Euler-Poisson-Darboux mode decomposition."""

__version__ = "0.1.0"
