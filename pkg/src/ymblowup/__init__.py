"""Numerical laboratory for stable self-similar blowup of equivariant Yang-Mills waves."""
__version__ = "0.1.0"
