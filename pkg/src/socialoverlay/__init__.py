"""Routing on heuristically embedded social overlays."""

__version__ = "0.1.0"
