"""Temporal contact-network analytics for contact-tracing databases."""

from .graph_core import (
    EdgeRecord,
    GraphError,
    Group,
    Method,
    ParseError,
    Snapshot,
    TemporalGraph,
    ValidationError,
    VertexRecord,
    load,
    write,
)

__version__ = "0.1.0"

__all__ = [
    "EdgeRecord",
    "GraphError",
    "Group",
    "Method",
    "ParseError",
    "Snapshot",
    "TemporalGraph",
    "ValidationError",
    "VertexRecord",
    "__version__",
    "load",
    "write",
]
