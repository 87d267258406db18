from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from llmhg.errors import InvalidConfig

logger = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-12


def squared_distances(Y: np.ndarray) -> np.ndarray:
    diff = Y[:, None, :] - Y[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def squared_distances_backward(Y: np.ndarray, dS: np.ndarray) -> np.ndarray:
    Q = dS + dS.T
    return 2.0 * (Q.sum(axis=1)[:, None] * Y - Q @ Y)


def median_bandwidth(Y: np.ndarray, H: np.ndarray, fallback: float = 1.0) -> float:
    """Median squared distance over intra-edge pairs; ``fallback`` when there is none or it is 0."""
    S = squared_distances(Y)
    values = []
    for column in range(H.shape[1]):
        members = np.flatnonzero(H[:, column])
        if members.size < 2:
            continue
        upper = np.triu_indices(members.size, k=1)
        values.append(S[np.ix_(members, members)][upper])
    if not values:
        return fallback
    median = float(np.median(np.concatenate(values)))
    if not median > 0 or not np.isfinite(median):
        logger.debug("degenerate median bandwidth %.3g, using %.3g", median, fallback)
        return fallback
    return median


def intra_cohesion(K: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Mean heat-kernel weight over ordered member pairs; singleton edges score 1."""
    delta = H.sum(axis=0)
    pair_sums = np.einsum("ie,ij,je->e", H, K, H) - delta
    pairs = delta * (delta - 1.0)
    return np.divide(pair_sums, pairs, out=np.ones_like(delta), where=pairs > 0)


def inter_separation(P: np.ndarray) -> np.ndarray:
    """sum_k ||p_e - p_k||^2 / n_e, the sum including e itself."""
    m = P.shape[0]
    if m == 0:
        return np.zeros(0)
    norms = np.einsum("ij,ij->i", P, P)
    return (m * norms + norms.sum() - 2.0 * (P @ P.sum(axis=0))) / m


def edge_weights(H: np.ndarray, Y: np.ndarray, mu: float, P: np.ndarray, beta: float) -> np.ndarray:
    if not mu > 0:
        raise InvalidConfig(f"heat-kernel bandwidth must be > 0, got {mu}")
    K = np.exp(-squared_distances(Y) / mu)
    return beta * intra_cohesion(K, H) + (1.0 - beta) * inter_separation(P) + WEIGHT_FLOOR


def hyperedge_weight(
    members: Sequence[int],
    projected: np.ndarray,
    mu: float,
    prototypes: np.ndarray,
    edge_index: int,
    beta: float,
) -> float:
    """w(e) of a single edge, spelled out pair by pair.

    ``projected`` holds phi(x) for every vertex, ``prototypes`` the corrected p of every
    edge of the hypergraph.
    """
    if not mu > 0:
        raise InvalidConfig(f"heat-kernel bandwidth must be > 0, got {mu}")
    rows = list(members)
    if len(rows) == 1:
        intra = 1.0
    else:
        total = 0.0
        for i in rows:
            for j in rows:
                if i != j:
                    diff = projected[i] - projected[j]
                    total += float(np.exp(-np.dot(diff, diff) / mu))
        intra = total / (len(rows) * (len(rows) - 1))
    own = prototypes[edge_index]
    inter = sum(float(np.dot(own - other, own - other)) for other in prototypes) / len(prototypes)
    return beta * intra + (1.0 - beta) * inter
