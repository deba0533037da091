"""Graded Lie algebra and series machinery for tree automorphism groups."""

__version__ = "0.1.0"
