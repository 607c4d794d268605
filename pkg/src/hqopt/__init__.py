"""Homogeneous quadratic optimization via semidefinite relaxation and rounding."""

__version__ = "0.1.0"
