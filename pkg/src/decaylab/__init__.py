"""Numerical laboratory for dispersive weighted-decay estimates."""

__version__ = "0.1.0"
