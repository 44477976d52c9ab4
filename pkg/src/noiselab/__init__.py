"""Noise-channel classification from simulated QKD error rates."""

__version__ = "0.1.0"
