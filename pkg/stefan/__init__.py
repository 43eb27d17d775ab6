"""Solvers for the one-phase Stefan problem of nonlinear conduction."""

__version__ = "0.1.0"
