"""Virasoro blocks and the boundary decomposition of the loop-soup layering two-point function."""

__version__ = "0.1.0"
