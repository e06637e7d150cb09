"""Solvers, generators and analysis tools for simple stochastic games."""

__version__ = "0.1.0"
