"""Sliding-window correlation indicators for enterprise digital copies."""

__version__ = "0.1.0"
