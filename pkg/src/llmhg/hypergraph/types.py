from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from llmhg.errors import InternalInvariantViolation
from llmhg.profile.types import TextEmbedding


@dataclass(frozen=True)
class Hyperedge:
    edge_id: str
    angle: str
    label: str
    members: Tuple[str, ...]
    text_embedding: Optional[TextEmbedding] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.members:
            raise InternalInvariantViolation(f"hyperedge {self.edge_id} has no members")

    @property
    def degree(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class MultiViewHypergraph:
    """One user's hypergraph. ``edges`` is the flat, ordered edge list; views are derived from it."""

    user_id: str
    vertices: Tuple[str, ...]
    edges: Tuple[Hyperedge, ...]

    def __post_init__(self) -> None:
        known = set(self.vertices)
        if len(known) != len(self.vertices):
            raise InternalInvariantViolation(f"duplicate vertices for user {self.user_id}")
        for edge in self.edges:
            stray = [item for item in edge.members if item not in known]
            if stray:
                raise InternalInvariantViolation(f"edge {edge.edge_id} references items outside the history: {stray[:3]}")

    @property
    def n_e(self) -> int:
        return len(self.edges)

    @property
    def views(self) -> Dict[str, List[Hyperedge]]:
        grouped: Dict[str, List[Hyperedge]] = {}
        for edge in self.edges:
            grouped.setdefault(edge.angle, []).append(edge)
        return grouped

    @property
    def isolated(self) -> FrozenSet[str]:
        covered = {item for edge in self.edges for item in edge.members}
        return frozenset(item for item in self.vertices if item not in covered)

    def vertex_index(self) -> Dict[str, int]:
        return {item: position for position, item in enumerate(self.vertices)}


@dataclass(frozen=True)
class HypergraphTensors:
    """Dense tensors of one hypergraph.

    ``w`` holds the diagonal of W, ``delta`` the diagonal of D_e and ``d`` the diagonal of
    D_v. ``isolated`` flags vertices no edge covers.
    """

    H: np.ndarray
    w: np.ndarray
    delta: np.ndarray
    d: np.ndarray
    isolated: np.ndarray

    @property
    def n_vertices(self) -> int:
        return int(self.H.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.H.shape[1])

    @property
    def W(self) -> np.ndarray:
        return np.diag(self.w)

    @property
    def D_e(self) -> np.ndarray:
        return np.diag(self.delta)

    @property
    def D_v(self) -> np.ndarray:
        return np.diag(self.d)
