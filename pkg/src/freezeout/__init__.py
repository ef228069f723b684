"""Thermometry toolkit for finite-temperature annealers."""

__version__ = "0.1.0"
