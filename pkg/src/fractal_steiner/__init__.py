"""Tube functions, normal bundles and complex dimensions of planar sets."""

__version__ = "0.1.0"
