"""Flat surfaces, tremors, transverse cocycles and covering estimates."""
__version__ = "0.1.0"
