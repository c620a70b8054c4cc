"""Smoothed-l0 sparse recovery with convergence-guaranteeing parameter schedules."""

__version__ = "0.1.0"
