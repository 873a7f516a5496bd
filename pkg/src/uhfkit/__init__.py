"""Finite-stage computations for actions of discrete abelian groups on UHF algebras."""

__version__ = "0.1.0"
