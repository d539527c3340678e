"""Measurement errors, local representability and uncertainty relations for finite quantum systems."""

__version__ = "0.1.0"
