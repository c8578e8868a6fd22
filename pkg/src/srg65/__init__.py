"""Circulant-block search for a strongly regular graph srg(65, 32, 15, 16)."""

__version__ = "0.1.0"
