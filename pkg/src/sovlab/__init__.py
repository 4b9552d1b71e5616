"""Separation of variables toolkit for graded spin chains and the Hubbard model."""
__version__ = "0.1.0"
