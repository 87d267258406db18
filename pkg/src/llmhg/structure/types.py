from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from llmhg.errors import InvalidConfig, ShapeError
from llmhg.utils import sigmoid


@dataclass
class KernelParams:
    """Heat kernel exp(-||phi x_i - phi x_j||^2 / mu)."""

    phi: np.ndarray
    mu: float = 1.0

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise InvalidConfig(f"heat-kernel bandwidth must be > 0, got {self.mu}")

    @classmethod
    def identity(cls, d_f: int, mu: float = 1.0) -> "KernelParams":
        return cls(phi=np.eye(d_f), mu=mu)


@dataclass
class GateParams:
    """Linear functional h(T) = vector . T + bias; lambda = sigmoid(-h(T))."""

    vector: np.ndarray
    bias: float = 0.0

    @classmethod
    def zeros(cls, d_f: int) -> "GateParams":
        return cls(vector=np.zeros(d_f), bias=0.0)


@dataclass
class CutPredictor:
    """F = sigmoid(X head[:, :m] + bias[:m]); the head is as wide as the largest user hypergraph."""

    head: np.ndarray
    bias: np.ndarray

    @property
    def width(self) -> int:
        return int(self.head.shape[1])

    def predict(self, X: np.ndarray, n_e: int) -> np.ndarray:
        if n_e > self.width:
            raise ShapeError(f"cut head has {self.width} columns, hypergraph needs {n_e}")
        return sigmoid(X @ self.head[:, :n_e] + self.bias[:n_e])


@dataclass(frozen=True)
class PrototypeSet:
    edge_ids: Tuple[str, ...]
    p_ori: np.ndarray
    p: np.ndarray
    lam: np.ndarray

    @property
    def shifts(self) -> np.ndarray:
        """|p - p_ori| per edge."""
        return np.linalg.norm(self.p - self.p_ori, axis=1)


@dataclass(frozen=True)
class SLHyperparams:
    beta: float = 0.7
    alpha: float = 100.0
    learning_rate: float = 0.05
    epochs: int = 100
    weight_refresh_every: int = 1

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta <= 1.0:
            raise InvalidConfig(f"beta must lie in [0, 1], got {self.beta}")
        if self.alpha < 0:
            raise InvalidConfig(f"alpha must be >= 0, got {self.alpha}")
        if self.learning_rate <= 0:
            raise InvalidConfig(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1 or self.weight_refresh_every < 1:
            raise InvalidConfig("epochs and weight_refresh_every must be >= 1")


@dataclass
class StructureState:
    """Inputs of one user's structure-learning step.

    ``text`` rows are the label embeddings T of each edge, ``has_text`` marks edges that
    have one. ``fixed_weights`` replaces the learned w(e) (unit weights, or a cached
    refresh) and cuts gradients through the weights.
    """

    X: np.ndarray
    H: np.ndarray
    text: np.ndarray
    has_text: np.ndarray
    kernel: KernelParams
    gate: GateParams
    cut: CutPredictor
    beta: float = 0.7
    use_text: bool = True
    with_loss: bool = True
    fixed_weights: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        n_v, d_f = self.X.shape
        if self.H.shape[0] != n_v:
            raise ShapeError(f"H has {self.H.shape[0]} rows for {n_v} vertices")
        if self.text.shape != (self.H.shape[1], d_f):
            raise ShapeError(f"text table shape {self.text.shape} does not match {self.H.shape[1]} edges x {d_f}")
