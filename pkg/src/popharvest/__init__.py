"""Discrete prey-predator maps: equilibria, stability, basin scans and optimal harvesting."""

__version__ = "0.1.0"
