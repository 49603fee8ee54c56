"""Overlapping cohesive and 2-mode community detection with directed affiliations."""

__version__ = "0.1.0"
