"""Cooperative-jamming secrecy engine for the K-user Gaussian interference channel."""

__version__ = "0.1.0"
