"""Fractional almost Kähler–Lagrange geometry on sampled charts."""

__version__ = "0.1.0"
