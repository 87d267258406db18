from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, Tuple

import numpy as np

from llmhg.errors import ShapeError

# checkpoint order, do not reorder
PARAM_ORDER: Tuple[str, ...] = (
    "E",
    "phi",
    "gate_vector",
    "gate_bias",
    "cut_head",
    "cut_bias",
    "theta",
    "fusion",
    "fusion_bias",
    "decay_logit",
)

GRADIENT_CLAMP = 10.0


@dataclass
class ModelParams:
    """Every learnable tensor of the model; scalars are kept as shape-(1,) arrays."""

    E: np.ndarray
    phi: np.ndarray
    gate_vector: np.ndarray
    gate_bias: np.ndarray
    cut_head: np.ndarray
    cut_bias: np.ndarray
    theta: np.ndarray
    fusion: np.ndarray
    fusion_bias: np.ndarray
    decay_logit: np.ndarray

    @classmethod
    def initialize(
        cls,
        n_items: int,
        d_f: int,
        *,
        head_width: int,
        n_layers: int = 1,
        rng: np.random.Generator,
        scale: float = 0.1,
    ) -> "ModelParams":
        return cls(
            E=rng.normal(0.0, scale, size=(n_items, d_f)),
            phi=np.eye(d_f),
            gate_vector=np.zeros(d_f),
            gate_bias=np.zeros(1),
            cut_head=rng.normal(0.0, scale, size=(d_f, head_width)),
            cut_bias=np.zeros(head_width),
            theta=np.stack([np.eye(d_f)] * n_layers) if n_layers else np.zeros((0, d_f, d_f)),
            fusion=np.zeros((d_f, 2 * d_f)),
            fusion_bias=np.zeros(d_f),
            decay_logit=np.zeros(1),
        )

    @property
    def n_items(self) -> int:
        return int(self.E.shape[0])

    @property
    def d_f(self) -> int:
        return int(self.E.shape[1])

    @property
    def head_width(self) -> int:
        return int(self.cut_head.shape[1])

    @property
    def n_layers(self) -> int:
        return int(self.theta.shape[0])

    def items(self) -> Iterator[Tuple[str, np.ndarray]]:
        for name in PARAM_ORDER:
            yield name, getattr(self, name)

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: tuple(array.shape) for name, array in self.items()}

    def zeros_like(self) -> "ModelParams":
        return ModelParams(**{name: np.zeros_like(array) for name, array in self.items()})

    def copy(self) -> "ModelParams":
        return ModelParams(**{name: array.copy() for name, array in self.items()})

    def step(self, grads: "ModelParams", learning_rate: float, clamp: float = GRADIENT_CLAMP) -> None:
        """Plain gradient descent with every gradient entry clamped to [-clamp, clamp]."""
        for name, array in self.items():
            grad = getattr(grads, name)
            if grad.shape != array.shape:
                raise ShapeError(f"gradient for {name} has shape {grad.shape}, expected {array.shape}")
            array -= learning_rate * np.clip(grad, -clamp, clamp)

    def equals(self, other: "ModelParams") -> bool:
        return all(np.array_equal(array, getattr(other, name)) for name, array in self.items())
