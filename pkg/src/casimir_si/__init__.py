"""Casimir force between a gold sphere and a doped silicon plate, and the
statistical comparison of theory with repeated force-distance measurements."""

__version__ = "0.1.0"
