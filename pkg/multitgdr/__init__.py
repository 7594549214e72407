"""Threshold gradient descent regularization for binary, multi-class and
multi-study classification."""

__version__ = "1.0.0"
