"""Exact-computation laboratory for supervised vs semi-supervised minimax learning rates."""

__version__ = "0.1.0"
