"""Kleinian group limit sets and their dimensions."""

__version__ = "0.1.0"
