from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol, Tuple

import numpy as np

from llmhg.errors import EmptyHistory
from llmhg.utils import sigmoid


@dataclass
class EncoderCache:
    sequence: np.ndarray
    coefficients: np.ndarray
    rows: np.ndarray
    u: np.ndarray
    gamma: float


class BaseEncoder(Protocol):
    """Conventional sequential encoder whose user vector is fused with the hypergraph one."""

    def encode(self, table: np.ndarray, decay_logit: float, sequence: np.ndarray) -> Tuple[np.ndarray, EncoderCache]:
        ...

    def backward(self, cache: EncoderCache, du: np.ndarray) -> Tuple[np.ndarray, float]:
        ...


class SimpleSeqEncoder:
    """Exponentially decayed mean of the item vectors, newest item weighted most.

    u = sum_t gamma^(n-1-t) f(s_t) / sum_k gamma^k with gamma = sigmoid(decay_logit).
    ``text_table`` (frozen) is added to the item vectors for the word-vector baseline.
    """

    def __init__(self, text_table: Optional[np.ndarray] = None) -> None:
        self.text_table = text_table

    def encode(self, table: np.ndarray, decay_logit: float, sequence: np.ndarray) -> Tuple[np.ndarray, EncoderCache]:
        if len(sequence) == 0:
            raise EmptyHistory("cannot encode an empty sequence")
        gamma = float(sigmoid(decay_logit))
        powers = np.arange(len(sequence) - 1, -1, -1, dtype=np.float64)
        weights = gamma**powers
        coefficients = weights / weights.sum()
        rows = table[sequence]
        if self.text_table is not None:
            rows = rows + self.text_table[sequence]
        u = coefficients @ rows
        return u, EncoderCache(sequence=np.asarray(sequence), coefficients=coefficients, rows=rows, u=u, gamma=gamma)

    def backward(self, cache: EncoderCache, du: np.ndarray) -> Tuple[np.ndarray, float]:
        """Returns (per-position row gradients, gradient of the decay logit)."""
        gamma = cache.gamma
        powers = np.arange(len(cache.sequence) - 1, -1, -1, dtype=np.float64)
        d_rows = np.outer(cache.coefficients, du)
        # d coefficient_t / d gamma = coefficient_t * (power_t - sum_k coefficient_k power_k) / gamma
        d_coefficients = cache.coefficients * (powers - cache.coefficients @ powers) / gamma
        d_gamma = float(d_coefficients @ (cache.rows @ du))
        return d_rows, d_gamma * gamma * (1.0 - gamma)
