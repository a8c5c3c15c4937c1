"""Negative entropy, concentration estimation and mixture clustering for the von Mises-Fisher family."""

__version__ = "0.1.0"
