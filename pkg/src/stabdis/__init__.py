"""Stabilizer disentangling of matrix product states."""

__version__ = "0.1.0"
