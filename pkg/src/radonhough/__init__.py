"""Radon and Hough transforms on a shared parameter grid."""

__version__ = "0.1.0"
