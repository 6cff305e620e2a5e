"""Hierarchical significant-words language models."""

__version__ = "0.1.0"
