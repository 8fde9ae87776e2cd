"""Numerical laboratory for multipolar Hardy inequalities."""

__version__ = "0.1.0"
