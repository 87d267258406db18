from __future__ import annotations

from typing import Dict, List, Tuple

import numpy as np

from llmhg.dataset.types import MIN_SEQUENCE_LENGTH, InteractionDataset, ItemCatalog
from llmhg.errors import InvalidConfig

ERAS = ("70s", "80s", "90s", "00s")


def planted_corpus(
    *,
    n_users: int = 500,
    n_items: int = 200,
    n_clusters: int = 8,
    focus: int = 2,
    purity: float = 0.9,
    min_length: int = 8,
    max_length: int = 20,
    seed: int = 7,
) -> InteractionDataset:
    """Synthetic corpus with latent interest clusters.

    Items are dealt round-robin into ``n_clusters`` clusters, exposed as the ``genre``
    attribute (plus a random ``era:`` attribute carrying no signal). Each user draws
    ``focus`` clusters and takes ``purity`` of their interactions from them, staying in the
    current cluster with probability 0.7 between steps. Popularity inside a cluster is
    Zipf-like.
    """
    if n_clusters < focus or n_items < n_clusters or not 0.0 <= purity <= 1.0:
        raise InvalidConfig("planted corpus needs n_items >= n_clusters >= focus and purity in [0, 1]")
    if min_length < MIN_SEQUENCE_LENGTH or max_length < min_length:
        raise InvalidConfig(f"sequence lengths must satisfy {MIN_SEQUENCE_LENGTH} <= min <= max")
    rng = np.random.default_rng(seed)

    item_ids = [f"i{index:04d}" for index in range(n_items)]
    clusters: List[List[int]] = [list(range(c, n_items, n_clusters)) for c in range(n_clusters)]
    attributes: Dict[str, Tuple[str, ...]] = {}
    titles: Dict[str, str] = {}
    for cluster, members in enumerate(clusters):
        for rank, index in enumerate(members):
            era = ERAS[int(rng.integers(len(ERAS)))]
            attributes[item_ids[index]] = (f"c{cluster}", f"era:{era}")
            titles[item_ids[index]] = f"Item {index} (c{cluster}/{rank})"
    popularity = [_zipf(len(members)) for members in clusters]

    sequences: Dict[str, Tuple[str, ...]] = {}
    for user in range(n_users):
        liked = [int(c) for c in rng.choice(n_clusters, size=focus, replace=False)]
        length = int(rng.integers(min_length, max_length + 1))
        seen: set[int] = set()
        sequence: List[str] = []
        current = liked[0]
        attempts = 0
        while len(sequence) < length and attempts < 50 * length:
            attempts += 1
            if rng.random() < purity:
                if rng.random() >= 0.7:
                    current = liked[int(rng.integers(focus))]
                cluster = current
            else:
                cluster = int(rng.integers(n_clusters))
            members = clusters[cluster]
            index = members[int(rng.choice(len(members), p=popularity[cluster]))]
            if index in seen:
                continue
            seen.add(index)
            sequence.append(item_ids[index])
        sequences[f"u{user:04d}"] = tuple(sequence)

    used = sorted({item for sequence in sequences.values() for item in sequence})
    catalog = ItemCatalog(attributes=attributes, titles=titles, default_angle="genre")
    return InteractionDataset(sequences=sequences, catalog=catalog.restricted_to(used))


def planted_cluster_of(dataset: InteractionDataset, item_id: str) -> str:
    for attribute in dataset.catalog.attributes_of(item_id):
        if ":" not in attribute:
            return attribute
    raise KeyError(item_id)


def _zipf(size: int, exponent: float = 0.8) -> np.ndarray:
    weights = 1.0 / np.arange(1, size + 1) ** exponent
    return weights / weights.sum()
