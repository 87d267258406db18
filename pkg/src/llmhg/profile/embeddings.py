from __future__ import annotations

import hashlib
from functools import lru_cache
from typing import Protocol

import numpy as np

from llmhg.dataset.types import ItemCatalog
from llmhg.errors import InvalidConfig, NumericalError
from llmhg.profile.types import TextEmbedding


class EmbeddingProvider(Protocol):
    def raw_vector(self, label: str, dim: int) -> np.ndarray:
        ...


class HashEmbeddingProvider:
    """Fallback provider: coordinate j is sha256("{seed}:{label}:{j}") read as a uint64 in [-1, 1)."""

    def __init__(self, seed: int = 0) -> None:
        self.seed = seed

    def raw_vector(self, label: str, dim: int) -> np.ndarray:
        return _hash_expand(self.seed, label, dim).copy()


@lru_cache(maxsize=65536)
def _hash_expand(seed: int, label: str, dim: int) -> np.ndarray:
    values = np.empty(dim, dtype=np.float64)
    for j in range(dim):
        digest = hashlib.sha256(f"{seed}:{label}:{j}".encode("utf-8")).digest()
        values[j] = int.from_bytes(digest[:8], "big") / 2.0**64 * 2.0 - 1.0
    values.setflags(write=False)
    return values


def embed_label(provider: EmbeddingProvider, label: str, d_f: int) -> TextEmbedding:
    if d_f < 2:
        raise InvalidConfig(f"embedding dimension must be >= 2, got {d_f}")
    if not label:
        raise ValueError("cannot embed an empty label")
    vector = np.asarray(provider.raw_vector(label, d_f), dtype=np.float64)
    if vector.shape != (d_f,) or not np.all(np.isfinite(vector)):
        raise NumericalError(f"provider returned an unusable vector for {label!r}")
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise NumericalError(f"zero embedding for {label!r}")
    return TextEmbedding(label=label, vector=vector / norm)


def label_text_table(catalog: ItemCatalog, item_order: list[str] | tuple[str, ...], provider: EmbeddingProvider, d_f: int) -> np.ndarray:
    """Per-item mean of its attribute-label embeddings (zeros for attribute-less items)."""
    table = np.zeros((len(item_order), d_f), dtype=np.float64)
    for row, item in enumerate(item_order):
        attributes = catalog.attributes_of(item)
        if not attributes:
            continue
        vectors = [embed_label(provider, attribute.lower(), d_f).vector for attribute in attributes]
        table[row] = np.mean(vectors, axis=0)
    return table
