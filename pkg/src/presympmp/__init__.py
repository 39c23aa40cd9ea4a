"""Presymplectic constraint algorithm for Pontryagin's Maximum Principle."""

__version__ = "0.1.0"
