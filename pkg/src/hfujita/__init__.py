"""Fractional sub-Laplacian numerics on the Heisenberg group and Fujita-dichotomy experiments."""

__version__ = "0.1.0"
