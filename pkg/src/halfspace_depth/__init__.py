"""Exact bivariate halfspace depth, empirical depth trimmed regions and the
strong-law machinery around them."""

__version__ = "0.1.0"
