"""Quantitative analysis of photo-sharing social corpora."""

__version__ = "0.1.0"
