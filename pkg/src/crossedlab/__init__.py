"""Numerical toolkit for smooth crossed products of Fréchet algebras by groups of polynomial growth."""

__version__ = "0.1.0"
