"""Qualitative two-world question answering over small q+/q- theories."""

__version__ = "0.1.0"
