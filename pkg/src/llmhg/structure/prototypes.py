from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from llmhg.errors import NumericalError
from llmhg.structure.types import GateParams
from llmhg.utils import sigmoid


def prototype_initial(member_features: np.ndarray) -> np.ndarray:
    """Mean feature of the edge's members."""
    rows = np.atleast_2d(np.asarray(member_features, dtype=np.float64))
    if rows.shape[0] == 0:
        raise ValueError("a hyperedge prototype needs at least one member")
    return rows.mean(axis=0)


def initial_prototypes(H: np.ndarray, X: np.ndarray) -> np.ndarray:
    """All p_ori at once: H^T X / delta."""
    delta = H.sum(axis=0)
    return (H.T @ X) / delta[:, None]


def gate_lambda(T: np.ndarray, gate: GateParams) -> float:
    h = float(np.dot(gate.vector, T) + gate.bias)
    if not np.isfinite(h):
        raise NumericalError(f"gate value is not finite ({h})")
    return float(sigmoid(-h))


def prototype_corrected(p_ori: np.ndarray, T: Optional[np.ndarray], gate: GateParams) -> Tuple[np.ndarray, float]:
    """Blend the member mean with the label text: p = (1 - lambda) p_ori + lambda T.

    Edges without text keep p_ori and report lambda = 0.
    """
    if T is None:
        return np.array(p_ori, dtype=np.float64), 0.0
    lam = gate_lambda(T, gate)
    return (1.0 - lam) * p_ori + lam * T, lam


def corrected_prototypes(
    p_ori: np.ndarray,
    text: np.ndarray,
    has_text: np.ndarray,
    gate: GateParams,
    *,
    use_text: bool = True,
) -> Tuple[np.ndarray, np.ndarray]:
    if not use_text or p_ori.shape[0] == 0:
        return p_ori.copy(), np.zeros(p_ori.shape[0])
    h = text @ gate.vector + gate.bias
    if not np.all(np.isfinite(h)):
        raise NumericalError("gate values are not finite")
    lam = np.where(has_text, sigmoid(-h), 0.0)
    return (1.0 - lam)[:, None] * p_ori + lam[:, None] * text, lam
