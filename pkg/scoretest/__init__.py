"""Score-based hypothesis testing for unnormalized models."""

__version__ = "0.1.0"
