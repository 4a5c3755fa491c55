"""Participation-degree diagnostics for over-smoothing on graphs and disordered lattices."""

__version__ = "0.1.0"
