"""gruae: dynamic-feature embeddings from two-step running sequences."""

__version__ = "0.1.0"
