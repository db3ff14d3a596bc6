"""Morphological analogies: corpora, embedders, analogy networks and baseline solvers."""

__version__ = "0.1.0"
