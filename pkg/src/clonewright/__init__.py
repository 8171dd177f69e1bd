"""Clonewright: clone detection and interactive elimination for Mel projects."""

__version__ = "0.1.0"
