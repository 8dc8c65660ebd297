"""Kerr oscillator dynamics and Wigner-function negativity."""

__version__ = "0.1.0"
