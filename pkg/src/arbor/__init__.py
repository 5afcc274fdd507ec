"""Recursive-greedy solvers for budgeted submodular tree orienteering on directed metrics."""

__version__ = "0.1.0"
