"""Discontinuous constituency parsing via augmented non-projective
dependencies and a pointer-network parser."""

__version__ = "0.1.0"
