"""Proportional-integral projected gradient (PIPG) and baseline first-order conic solvers."""

__version__ = "0.1.0"
