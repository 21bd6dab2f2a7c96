"""Surrogate-assisted multi-objective evolutionary optimization."""
__version__ = "0.1.0"
