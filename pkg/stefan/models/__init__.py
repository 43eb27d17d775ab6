"""Models package for the Stefan solvers."""
