from __future__ import annotations

import logging
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from llmhg.errors import DegenerateHypergraph, InternalInvariantViolation, InvalidUsage, ShapeError
from llmhg.hypergraph.types import Hyperedge, HypergraphTensors, MultiViewHypergraph
from llmhg.profile.types import UNKNOWN, CategoryAssignment, TextEmbedding

logger = logging.getLogger(__name__)


def edge_id(angle: str, label: str) -> str:
    return f"{angle}/{label}"


def assemble(
    user_id: str,
    vertices: Sequence[str],
    angles: Sequence[str],
    assignments: Iterable[CategoryAssignment],
    embeddings: Optional[Mapping[str, TextEmbedding]] = None,
) -> MultiViewHypergraph:
    """One hyperedge per (angle, category); edges ordered by angle, then label."""
    by_angle: Dict[str, CategoryAssignment] = {assignment.angle: assignment for assignment in assignments}
    missing = [angle for angle in angles if angle not in by_angle]
    if missing:
        raise InvalidUsage(f"no category assignment for angles {missing} of user {user_id}")

    order = list(dict.fromkeys(vertices))
    position = {item: index for index, item in enumerate(order)}
    edges: List[Hyperedge] = []
    for angle in angles:
        groups: Dict[str, set] = {}
        for item, labels in by_angle[angle].labels.items():
            if item not in position:
                continue
            for label in labels:
                if label and label != UNKNOWN:
                    groups.setdefault(label, set()).add(item)
        for label in sorted(groups):
            members = tuple(sorted(groups[label], key=position.__getitem__))
            embedding = embeddings.get(label) if embeddings is not None else None
            edges.append(Hyperedge(edge_id(angle, label), angle, label, members, embedding))
    if not edges:
        raise DegenerateHypergraph(f"every category of user {user_id} is empty or unknown")
    return MultiViewHypergraph(user_id=user_id, vertices=tuple(order), edges=tuple(edges))


def edgeless(user_id: str, vertices: Sequence[str]) -> MultiViewHypergraph:
    """All-isolated hypergraph, the fallback when a builder has nothing to link."""
    return MultiViewHypergraph(user_id=user_id, vertices=tuple(dict.fromkeys(vertices)), edges=())


def restrict(hg: MultiViewHypergraph, vertices: Iterable[str]) -> MultiViewHypergraph:
    """Induced sub-hypergraph on ``vertices``; edges left empty are dropped."""
    keep = set(vertices)
    kept_vertices = tuple(item for item in hg.vertices if item in keep)
    edges = []
    for edge in hg.edges:
        members = tuple(item for item in edge.members if item in keep)
        if members:
            edges.append(Hyperedge(edge.edge_id, edge.angle, edge.label, members, edge.text_embedding))
    return MultiViewHypergraph(user_id=hg.user_id, vertices=kept_vertices, edges=tuple(edges))


def incidence(hg: MultiViewHypergraph) -> HypergraphTensors:
    """H with unit weights; d(v) is then the number of incident edges."""
    if not hg.vertices:
        raise InvalidUsage(f"hypergraph of user {hg.user_id} has no vertices")
    index = hg.vertex_index()
    H = np.zeros((len(hg.vertices), hg.n_e), dtype=np.float64)
    for column, edge in enumerate(hg.edges):
        for item in edge.members:
            H[index[item], column] = 1.0
    return with_weights(H, np.ones(hg.n_e, dtype=np.float64))


def with_weights(H: np.ndarray | HypergraphTensors, w: np.ndarray) -> HypergraphTensors:
    incidence_matrix = H.H if isinstance(H, HypergraphTensors) else np.asarray(H, dtype=np.float64)
    weights = np.asarray(w, dtype=np.float64)
    if weights.shape != (incidence_matrix.shape[1],):
        raise ShapeError(f"expected {incidence_matrix.shape[1]} edge weights, got shape {weights.shape}")
    delta = incidence_matrix.sum(axis=0)
    isolated = incidence_matrix.sum(axis=1) == 0
    return HypergraphTensors(H=incidence_matrix, w=weights, delta=delta, d=incidence_matrix @ weights, isolated=isolated)


def normalized_adjacency(tensors: HypergraphTensors) -> np.ndarray:
    """D_v^{-1/2} H W D_e^{-1} H^T D_v^{-1/2}, with zero rows and columns for isolated vertices."""
    if np.any(tensors.delta <= 0):
        raise InternalInvariantViolation("hyperedge with zero degree")
    covered = ~tensors.isolated
    if np.any(tensors.d[covered] <= 0):
        raise InternalInvariantViolation("covered vertex with non-positive degree")
    scale = np.zeros_like(tensors.d)
    scale[covered] = tensors.d[covered] ** -0.5
    B = (tensors.H * (tensors.w / tensors.delta)) @ tensors.H.T
    return scale[:, None] * B * scale[None, :]


def laplacian(tensors: HypergraphTensors) -> np.ndarray:
    # isolated rows of A are zero, so their rows of I - A are identity rows
    A = normalized_adjacency(tensors)
    L = np.eye(tensors.n_vertices) - A
    return 0.5 * (L + L.T)
