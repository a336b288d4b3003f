"""Grouped tree decompositions and a 2-approximation for treewidth."""

__version__ = "0.1.0"
