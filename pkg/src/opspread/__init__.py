"""Operator spreading in disordered spin chains via exact operator-MPS marginals."""

__version__ = "0.1.0"
