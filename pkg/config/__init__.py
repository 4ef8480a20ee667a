"""Adiabatic ground-state preparation simulator."""

__version__ = "0.1.0"
