"""Jet-level variational calculus for Einstein-Cartan-Dirac field theory."""

__version__ = "0.1.0"
