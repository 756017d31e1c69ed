"""Exact homomorphism-density calculus for step kernels (block-constant graphons)."""

__version__ = "0.1.0"
