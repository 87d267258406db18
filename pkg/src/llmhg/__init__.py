"""LLM-guided multi-view hypergraphs for sequential recommendation."""

__version__ = "0.1.0"
