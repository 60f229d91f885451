"""Procedural generation of graph-structure benchmark tasks with verified labels."""

__version__ = "0.1.0"
