"""Numerical verification toolkit for decay of ZK and gKdV solutions in moving regions."""

__version__ = "0.1.0"
