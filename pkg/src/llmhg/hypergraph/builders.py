"""Algorithmic hypergraph builders used as comparison points for the LLM-view hypergraph."""

from __future__ import annotations

import logging
from typing import List, Sequence

import numpy as np
from sklearn.cluster import KMeans

from llmhg.errors import DegenerateHypergraph, InvalidConfig
from llmhg.hypergraph.ops import edge_id
from llmhg.hypergraph.types import Hyperedge, MultiViewHypergraph

logger = logging.getLogger(__name__)

TRANSITION_VIEW = "transition"
CONTEXT_VIEW = "context"
INTENT_VIEW = "intent"


def transition_hyperedges(sequence: Sequence[str], user_id: str = "") -> MultiViewHypergraph:
    """Consecutive pairs {s_t, s_t+1}, one view."""
    if len(sequence) < 2:
        raise DegenerateHypergraph(f"transition hyperedges need at least 2 items, got {len(sequence)}")
    edges = []
    for t in range(len(sequence) - 1):
        members = tuple(dict.fromkeys((sequence[t], sequence[t + 1])))
        label = f"t{t}"
        edges.append(Hyperedge(edge_id(TRANSITION_VIEW, label), TRANSITION_VIEW, label, members))
    return MultiViewHypergraph(user_id=user_id, vertices=tuple(dict.fromkeys(sequence)), edges=tuple(edges))


def contextual_hyperedges(sequence: Sequence[str], window_sizes: Sequence[int], user_id: str = "") -> MultiViewHypergraph:
    """Every contiguous k-window for each k.

    Windows longer than the sequence add nothing; when none fits, every vertex is isolated.
    """
    if any(size < 2 for size in window_sizes):
        raise InvalidConfig(f"context windows must be >= 2, got {list(window_sizes)}")
    edges: List[Hyperedge] = []
    n = len(sequence)
    for size in window_sizes:
        for start in range(max(0, n - size + 1)):
            members = tuple(dict.fromkeys(sequence[start : start + size]))
            label = f"w{size}@{start}"
            edges.append(Hyperedge(edge_id(CONTEXT_VIEW, label), CONTEXT_VIEW, label, members))
    return MultiViewHypergraph(user_id=user_id, vertices=tuple(dict.fromkeys(sequence)), edges=tuple(edges))


def _cosine(rows: np.ndarray, vector: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1) * np.linalg.norm(vector)
    dots = rows @ vector
    return np.divide(dots, norms, out=np.zeros_like(dots), where=norms > 0)


def intent_hyperedges(
    items: Sequence[str],
    item_embeddings: np.ndarray,
    intent_prototypes: np.ndarray,
    top_n: int,
    user_id: str = "",
) -> MultiViewHypergraph:
    """Per prototype, one edge over the ``top_n`` most cosine-similar items (ties by index)."""
    if top_n < 2:
        raise InvalidConfig(f"intent top_n must be >= 2, got {top_n}")
    prototypes = np.atleast_2d(np.asarray(intent_prototypes, dtype=np.float64))
    if prototypes.shape[0] == 0:
        raise InvalidConfig("at least one intent prototype is required")
    table = np.asarray(item_embeddings, dtype=np.float64)
    if table.shape[0] != len(items):
        raise InvalidConfig(f"{len(items)} items but {table.shape[0]} embedding rows")
    edges = []
    for k, prototype in enumerate(prototypes):
        ranking = np.argsort(-_cosine(table, prototype), kind="stable")[:top_n]
        members = tuple(items[index] for index in sorted(ranking.tolist()))
        label = f"intent{k}"
        edges.append(Hyperedge(edge_id(INTENT_VIEW, label), INTENT_VIEW, label, members))
    return MultiViewHypergraph(user_id=user_id, vertices=tuple(items), edges=tuple(edges))


def intent_prototypes(item_table: np.ndarray, count: int, seed: int = 0) -> np.ndarray:
    """K-means centroids of the item text vectors; fewer centroids when rows are scarce."""
    table = np.asarray(item_table, dtype=np.float64)
    distinct = np.unique(table, axis=0).shape[0]
    clusters = max(1, min(count, distinct))
    if clusters < count:
        logger.warning("only %d distinct item vectors, using %d intent prototypes instead of %d", distinct, clusters, count)
    model = KMeans(n_clusters=clusters, n_init=10, random_state=seed)
    model.fit(table)
    return model.cluster_centers_
