"""Generalized quantum, classical and total correlation measures."""

__version__ = "0.1.0"
