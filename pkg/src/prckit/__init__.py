"""Pseudorandom error-correcting codes over GF(2) and their applications."""

__version__ = "0.1.0"
