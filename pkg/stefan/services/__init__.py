"""Services package for the Stefan solvers."""
