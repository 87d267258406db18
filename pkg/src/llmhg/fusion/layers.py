from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from llmhg.errors import NumericalError, ShapeError
from llmhg.hypergraph.ops import normalized_adjacency
from llmhg.hypergraph.types import HypergraphTensors
from llmhg.utils import sigmoid

PROBABILITY_CLIP = 1e-7


def propagation_matrix(tensors: HypergraphTensors) -> np.ndarray:
    """Normalized adjacency; isolated vertices keep their own features."""
    return normalized_adjacency(tensors) + np.diag(tensors.isolated.astype(np.float64))


@dataclass
class ConvolutionCache:
    inputs: List[np.ndarray] = field(default_factory=list)
    propagated: List[np.ndarray] = field(default_factory=list)
    pre_activation: List[np.ndarray] = field(default_factory=list)


def hyperedge_convolution(
    X: np.ndarray,
    propagation: np.ndarray | HypergraphTensors,
    theta: np.ndarray,
    activation: str = "relu",
    cache: Optional[ConvolutionCache] = None,
) -> np.ndarray:
    """X' = act(P X Theta), once per layer in ``theta``."""
    P = propagation_matrix(propagation) if isinstance(propagation, HypergraphTensors) else propagation
    if X.ndim != 2 or P.shape != (X.shape[0], X.shape[0]):
        raise ShapeError(f"features {X.shape} do not match propagation {P.shape}")
    layers = theta if theta.ndim == 3 else theta[None]
    out = X
    for weights in layers:
        if weights.shape != (out.shape[1], out.shape[1]):
            raise ShapeError(f"layer weights {weights.shape} do not match feature width {out.shape[1]}")
        propagated = P @ out
        z = propagated @ weights
        if cache is not None:
            cache.inputs.append(out)
            cache.propagated.append(propagated)
            cache.pre_activation.append(z)
        out = np.maximum(z, 0.0) if activation == "relu" else z
    return out


def hyperedge_convolution_backward(
    d_out: np.ndarray,
    propagation: np.ndarray,
    theta: np.ndarray,
    cache: ConvolutionCache,
    activation: str = "relu",
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dX, dTheta, dP)."""
    d_theta = np.zeros_like(theta)
    d_prop = np.zeros_like(propagation)
    grad = d_out
    for layer in reversed(range(theta.shape[0])):
        dz = grad * (cache.pre_activation[layer] > 0) if activation == "relu" else grad
        d_theta[layer] = cache.propagated[layer].T @ dz
        d_propagated = dz @ theta[layer].T
        d_prop += d_propagated @ cache.inputs[layer].T
        grad = propagation.T @ d_propagated
    return grad, d_theta, d_prop


def readout_weights(d: np.ndarray, isolated: np.ndarray) -> np.ndarray:
    return np.where(isolated, 1.0, d)


def readout_user(X_conv: np.ndarray, d: np.ndarray | HypergraphTensors, isolated: Optional[np.ndarray] = None) -> np.ndarray:
    """Degree-weighted mean of the convolved rows, isolated vertices counting with weight 1."""
    if isinstance(d, HypergraphTensors):
        d, isolated = d.d, d.isolated
    if isolated is None:
        isolated = d <= 0
    r = readout_weights(d, isolated)
    return r @ X_conv / r.sum()


def fuse(u_hg: np.ndarray, u_base: np.ndarray, fusion: np.ndarray, fusion_bias: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Gated sum g * u_hg + (1 - g) * u_base; returns (u, g)."""
    if u_hg.shape != u_base.shape:
        raise ShapeError(f"cannot fuse {u_hg.shape} with {u_base.shape}")
    g = sigmoid(fusion @ np.concatenate([u_hg, u_base]) + fusion_bias)
    return g * u_hg + (1.0 - g) * u_base, g


def predict_scores(u: np.ndarray, table: np.ndarray) -> np.ndarray:
    return table @ u


def clipped_probabilities(logits: np.ndarray) -> np.ndarray:
    return np.clip(sigmoid(logits), PROBABILITY_CLIP, 1.0 - PROBABILITY_CLIP)


def prediction_loss(y_pos: float, y_negs: Sequence[float] | np.ndarray) -> float:
    """-[ln y_pos + sum ln(1 - y_neg)] / (1 + K) on probabilities clipped to [1e-7, 1 - 1e-7]."""
    positive = float(np.clip(y_pos, PROBABILITY_CLIP, 1.0 - PROBABILITY_CLIP))
    negatives = np.clip(np.asarray(y_negs, dtype=np.float64), PROBABILITY_CLIP, 1.0 - PROBABILITY_CLIP)
    value = -(np.log(positive) + np.log1p(-negatives).sum()) / (1.0 + negatives.size)
    if not np.isfinite(value):
        raise NumericalError("prediction loss is not finite")
    return float(value)
