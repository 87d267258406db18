"""Per-user multi-view hypergraphs and their incidence/Laplacian tensors."""

from .builders import contextual_hyperedges, intent_hyperedges, intent_prototypes, transition_hyperedges
from .dump import parse_weights, read_hypergraph_dump, render_hypergraph, render_weights, write_hypergraph_dump
from .ops import assemble, edgeless, incidence, laplacian, normalized_adjacency, restrict, with_weights
from .types import Hyperedge, HypergraphTensors, MultiViewHypergraph

__all__ = [
    "Hyperedge",
    "HypergraphTensors",
    "MultiViewHypergraph",
    "assemble",
    "contextual_hyperedges",
    "edgeless",
    "incidence",
    "intent_hyperedges",
    "intent_prototypes",
    "laplacian",
    "normalized_adjacency",
    "parse_weights",
    "read_hypergraph_dump",
    "render_hypergraph",
    "render_weights",
    "restrict",
    "transition_hyperedges",
    "with_weights",
]
