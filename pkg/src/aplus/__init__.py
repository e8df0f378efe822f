"""Tunable adjacency-list indexes for an in-memory property graph engine."""
from .errors import APlusError
from .graph import PropertyCatalog, PropertyGraph, load_csv

__all__ = ["APlusError", "PropertyCatalog", "PropertyGraph", "load_csv"]
__version__ = "0.1.0"
