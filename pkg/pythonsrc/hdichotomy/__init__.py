"""Numerical toolkit for h-dichotomies of invertible evolution families."""

__version__ = "0.1.0"
