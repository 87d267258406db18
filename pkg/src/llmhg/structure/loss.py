"""Spectral structure loss Tr(F^T L_H F) with hand-written gradients.

The forward pass is recorded on a ``StructureTape``; ``structure_backward`` walks it back
to the item features, the kernel map phi, the text gate and the cut head. Downstream
consumers of the normalized adjacency A and the vertex degrees d (the convolution and the
readout) hand their upstream gradients in as ``dA`` and ``dd``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from llmhg.errors import InternalInvariantViolation, NumericalError, ShapeError
from llmhg.hypergraph.ops import laplacian
from llmhg.hypergraph.types import HypergraphTensors
from llmhg.structure.prototypes import corrected_prototypes, initial_prototypes
from llmhg.structure.types import PrototypeSet, StructureState
from llmhg.structure.weights import (
    WEIGHT_FLOOR,
    intra_cohesion,
    inter_separation,
    squared_distances,
    squared_distances_backward,
)
from llmhg.utils import all_finite


def structure_loss(F: np.ndarray, tensors: HypergraphTensors | np.ndarray) -> float:
    L = laplacian(tensors) if isinstance(tensors, HypergraphTensors) else np.asarray(tensors)
    if F.ndim != 2 or F.shape[0] != L.shape[0]:
        raise ShapeError(f"F has shape {F.shape}, Laplacian is {L.shape}")
    if isinstance(tensors, HypergraphTensors) and F.shape[1] != tensors.n_edges:
        raise ShapeError(f"F has {F.shape[1]} columns for {tensors.n_edges} hyperedges")
    return float(np.trace(F.T @ L @ F))


@dataclass
class StructureTape:
    state: StructureState
    delta: np.ndarray
    covered: np.ndarray
    p_ori: np.ndarray
    lam: np.ndarray
    P: np.ndarray
    w: np.ndarray
    d: np.ndarray
    s: np.ndarray
    B: np.ndarray
    A: np.ndarray
    Y: Optional[np.ndarray] = None
    K: Optional[np.ndarray] = None
    F: Optional[np.ndarray] = None
    L_str: float = 0.0

    def prototypes(self, edge_ids: Sequence[str]) -> PrototypeSet:
        return PrototypeSet(edge_ids=tuple(edge_ids), p_ori=self.p_ori, p=self.P, lam=self.lam)

    @property
    def propagation(self) -> np.ndarray:
        """A with isolated vertices passing their own features through."""
        return self.A + np.diag((~self.covered).astype(np.float64))


@dataclass
class StructureGrads:
    X: np.ndarray
    phi: np.ndarray
    gate_vector: np.ndarray
    gate_bias: float
    cut_head: np.ndarray
    cut_bias: np.ndarray


def structure_forward(state: StructureState) -> StructureTape:
    X, H = state.X, state.H
    delta = H.sum(axis=0)
    covered = H.sum(axis=1) > 0
    p_ori = initial_prototypes(H, X)
    P, lam = corrected_prototypes(p_ori, state.text, state.has_text, state.gate, use_text=state.use_text)

    Y = K = None
    if state.fixed_weights is not None:
        w = np.asarray(state.fixed_weights, dtype=np.float64)
        if w.shape != delta.shape:
            raise ShapeError(f"expected {delta.shape[0]} fixed weights, got {w.shape}")
    else:
        Y = X @ state.kernel.phi.T
        K = np.exp(-squared_distances(Y) / state.kernel.mu)
        w = state.beta * intra_cohesion(K, H) + (1.0 - state.beta) * inter_separation(P) + WEIGHT_FLOOR
    if not all_finite(w):
        raise NumericalError("hyperedge weights are not finite")

    d = H @ w
    if np.any(d[covered] <= 0):
        raise InternalInvariantViolation("covered vertex with non-positive degree")
    s = np.zeros_like(d)
    s[covered] = d[covered] ** -0.5
    B = (H * (w / delta)) @ H.T
    A = s[:, None] * B * s[None, :]

    tape = StructureTape(state=state, delta=delta, covered=covered, p_ori=p_ori, lam=lam, P=P, w=w, d=d, s=s, B=B, A=A, Y=Y, K=K)
    if state.with_loss:
        F = state.cut.predict(X, H.shape[1])
        tape.F = F
        tape.L_str = float(np.sum(F * F) - np.sum(A * (F @ F.T)))
    return tape


def structure_backward(
    tape: StructureTape,
    dA: Optional[np.ndarray] = None,
    dd: Optional[np.ndarray] = None,
    loss_weight: float = 1.0,
) -> StructureGrads:
    state = tape.state
    X, H = state.X, state.H
    n_v, m = H.shape
    phi = state.kernel.phi

    grad_X = np.zeros_like(X)
    grad_phi = np.zeros_like(phi)
    grad_vector = np.zeros_like(state.gate.vector)
    grad_bias = 0.0
    grad_head = np.zeros((X.shape[1], m))
    grad_cut_bias = np.zeros(m)

    dA_total = np.zeros((n_v, n_v)) if dA is None else np.array(dA, dtype=np.float64)
    dd_total = np.zeros(n_v) if dd is None else np.array(dd, dtype=np.float64)

    if state.with_loss and tape.F is not None and loss_weight != 0.0:
        F = tape.F
        dF = loss_weight * 2.0 * (F - tape.A @ F)
        dA_total -= loss_weight * (F @ F.T)
        dZ = dF * F * (1.0 - F)
        grad_head = X.T @ dZ
        grad_cut_bias = dZ.sum(axis=0)
        grad_X += dZ @ state.cut.head[:, :m].T

    if state.fixed_weights is None and m > 0:
        covered, s, delta = tape.covered, tape.s, tape.delta
        # A = diag(s) B diag(s), B = H diag(w / delta) H^T, s = d^-1/2, d = H w
        dB = np.outer(s, s) * dA_total
        dw = np.einsum("ie,ij,je->e", H, dB, H) / delta
        ds = ((dA_total + dA_total.T) * tape.B) @ s
        dd_total[covered] += ds[covered] * -0.5 * tape.d[covered] ** -1.5
        dw += H.T @ dd_total

        pairs = delta * (delta - 1.0)
        c = np.divide(state.beta * dw, pairs, out=np.zeros_like(dw), where=pairs > 0)
        dK = (H * c) @ H.T
        dS = -dK * tape.K / state.kernel.mu
        dY = squared_distances_backward(tape.Y, dS)
        grad_phi += dY.T @ X
        grad_X += dY @ phi

        a = (1.0 - state.beta) * dw
        P = tape.P
        dP = (2.0 / m) * (a[:, None] * (m * P - P.sum(axis=0)) + a.sum() * P - (a @ P)[None, :])

        lam = tape.lam
        dp_ori = (1.0 - lam)[:, None] * dP
        if state.use_text:
            dlam = np.einsum("ij,ij->i", state.text - tape.p_ori, dP)
            dh = -lam * (1.0 - lam) * dlam
            grad_vector += state.text.T @ dh
            grad_bias += float(dh.sum())
        grad_X += H @ (dp_ori / delta[:, None])

    grads = StructureGrads(
        X=grad_X,
        phi=grad_phi,
        gate_vector=grad_vector,
        gate_bias=grad_bias,
        cut_head=grad_head,
        cut_bias=grad_cut_bias,
    )
    if not all_finite(grad_X, grad_phi, grad_vector, grad_head, grad_cut_bias, grad_bias):
        raise NumericalError("non-finite structure-learning gradient")
    return grads


def sl_gradients(state: StructureState) -> Tuple[float, StructureGrads]:
    """L_str and its gradients for one user's hypergraph."""
    tape = structure_forward(state)
    return tape.L_str, structure_backward(tape)
