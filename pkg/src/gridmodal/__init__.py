"""Small-signal stability toolkit for multi-machine power systems."""

__version__ = "0.1.0"
