"""One user's forward and backward pass through the full model.

Structure learning produces the re-weighted normalized adjacency A; the hyperedge
convolution propagates the user's item vectors over it; the degree-weighted readout gives
u_hg; the base encoder gives u_base; a gate fuses both and the fused vector scores the
target against sampled negatives. L = L_str + alpha * L_pre.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from llmhg.config import RunConfig
from llmhg.errors import NumericalError
from llmhg.fusion.encoder import SimpleSeqEncoder
from llmhg.fusion.layers import (
    ConvolutionCache,
    clipped_probabilities,
    hyperedge_convolution,
    hyperedge_convolution_backward,
    readout_weights,
)
from llmhg.fusion.params import ModelParams
from llmhg.hypergraph.ops import incidence, restrict
from llmhg.hypergraph.types import MultiViewHypergraph
from llmhg.structure.loss import StructureTape, structure_backward, structure_forward
from llmhg.structure.types import CutPredictor, GateParams, KernelParams, SLHyperparams, StructureState
from llmhg.utils import all_finite, sigmoid


@dataclass(frozen=True)
class ModelSettings:
    """Training knobs of one run, resolved from the run configuration and its ablation."""

    alpha: float = 100.0
    beta: float = 0.7
    learning_rate: float = 0.05
    epochs: int = 100
    negatives: int = 100
    patience: int = 10
    weight_refresh_every: int = 1
    activation: str = "relu"
    conv_layers: int = 1
    use_hypergraph: bool = True
    use_text: bool = True
    learn_structure: bool = True
    eval_workers: int = 1

    def __post_init__(self) -> None:
        SLHyperparams(
            beta=self.beta,
            alpha=self.alpha,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            weight_refresh_every=self.weight_refresh_every,
        )

    @classmethod
    def from_config(cls, config: RunConfig, *, base_only: bool = False) -> "ModelSettings":
        use_hypergraph = not base_only and config.hypergraph not in ("none", "llm-augment")
        return cls(
            alpha=config.alpha,
            beta=config.effective_beta,
            learning_rate=config.learning_rate,
            epochs=config.epochs,
            negatives=config.negatives,
            patience=config.patience,
            weight_refresh_every=config.weight_refresh_every,
            activation=config.conv_activation,
            conv_layers=config.conv_layers,
            use_hypergraph=use_hypergraph,
            use_text=config.ablation != "no_procor",
            learn_structure=config.ablation != "no_sl",
            eval_workers=config.eval_workers,
        )


@dataclass
class UserContext:
    """Everything one prediction step of one user needs, as item indices and dense tensors."""

    user_id: str
    sequence: np.ndarray
    target: int
    vertex_index: np.ndarray
    H: np.ndarray
    text: np.ndarray
    has_text: np.ndarray
    mu: float
    edge_ids: Tuple[str, ...] = ()
    edge_labels: Tuple[str, ...] = ()

    @property
    def n_edges(self) -> int:
        return int(self.H.shape[1])


def build_context(
    user_id: str,
    hypergraph: Optional[MultiViewHypergraph],
    inputs: Sequence[str],
    target: Optional[str],
    item_index: Mapping[str, int],
    *,
    d_f: int,
    mu: float = 1.0,
) -> UserContext:
    """Hide everything but ``inputs`` from the hypergraph and index the result.

    ``target`` may be None when only the structure is needed; the context then has target -1.
    """
    target_index = item_index[target] if target is not None else -1
    sequence = np.array([item_index[item] for item in inputs], dtype=np.int64)
    if hypergraph is None:
        return UserContext(
            user_id=user_id,
            sequence=sequence,
            target=target_index,
            vertex_index=np.zeros(0, dtype=np.int64),
            H=np.zeros((0, 0)),
            text=np.zeros((0, d_f)),
            has_text=np.zeros(0, dtype=bool),
            mu=mu,
        )
    visible = restrict(hypergraph, inputs)
    tensors = incidence(visible)
    text = np.zeros((visible.n_e, d_f))
    has_text = np.zeros(visible.n_e, dtype=bool)
    for row, edge in enumerate(visible.edges):
        if edge.text_embedding is not None and edge.text_embedding.dim == d_f:
            text[row] = edge.text_embedding.vector
            has_text[row] = True
    return UserContext(
        user_id=user_id,
        sequence=sequence,
        target=target_index,
        vertex_index=np.array([item_index[item] for item in visible.vertices], dtype=np.int64),
        H=tensors.H,
        text=text,
        has_text=has_text,
        mu=mu,
        edge_ids=tuple(edge.edge_id for edge in visible.edges),
        edge_labels=tuple(edge.label for edge in visible.edges),
    )


def structure_state(
    params: ModelParams,
    ctx: UserContext,
    settings: ModelSettings,
    *,
    with_loss: bool,
    fixed_weights: Optional[np.ndarray] = None,
) -> StructureState:
    if not settings.learn_structure:
        fixed_weights = np.ones(ctx.n_edges)
    return StructureState(
        X=params.E[ctx.vertex_index],
        H=ctx.H,
        text=ctx.text,
        has_text=ctx.has_text,
        kernel=KernelParams(phi=params.phi, mu=ctx.mu),
        gate=GateParams(vector=params.gate_vector, bias=float(params.gate_bias[0])),
        cut=CutPredictor(head=params.cut_head, bias=params.cut_bias),
        beta=settings.beta,
        use_text=settings.use_text,
        with_loss=with_loss and settings.learn_structure,
        fixed_weights=fixed_weights,
    )


def _has_hypergraph(ctx: UserContext, settings: ModelSettings) -> bool:
    return settings.use_hypergraph and ctx.vertex_index.size > 0


def user_representation(
    params: ModelParams,
    ctx: UserContext,
    settings: ModelSettings,
    encoder: Optional[SimpleSeqEncoder] = None,
) -> np.ndarray:
    """Fused user vector, with hyperedge weights recomputed from the current parameters."""
    encoder = encoder or SimpleSeqEncoder()
    u_base, _ = encoder.encode(params.E, float(params.decay_logit[0]), ctx.sequence)
    if not _has_hypergraph(ctx, settings):
        return u_base
    tape = structure_forward(structure_state(params, ctx, settings, with_loss=False))
    X_conv = hyperedge_convolution(params.E[ctx.vertex_index], tape.propagation, params.theta, settings.activation)
    r = readout_weights(tape.d, ~tape.covered)
    u_hg = r @ X_conv / r.sum()
    g = sigmoid(params.fusion @ np.concatenate([u_hg, u_base]) + params.fusion_bias)
    return g * u_hg + (1.0 - g) * u_base


def loss_and_gradients(
    params: ModelParams,
    ctx: UserContext,
    settings: ModelSettings,
    negatives: np.ndarray,
    *,
    encoder: Optional[SimpleSeqEncoder] = None,
    fixed_weights: Optional[np.ndarray] = None,
) -> Tuple[float, float, ModelParams, Optional[StructureTape]]:
    """(L_str, L_pre, gradients, structure tape) of L = L_str + alpha * L_pre for one user.

    With alpha = 0 the prediction branch is never evaluated and L_pre is reported as 0.
    """
    encoder = encoder or SimpleSeqEncoder()
    grads = params.zeros_like()
    use_hg = _has_hypergraph(ctx, settings)
    predict = settings.alpha > 0

    tape: Optional[StructureTape] = None
    L_str = 0.0
    if use_hg:
        tape = structure_forward(structure_state(params, ctx, settings, with_loss=True, fixed_weights=fixed_weights))
        L_str = tape.L_str

    L_pre = 0.0
    dA = dd = None
    if predict:
        u_base, base_cache = encoder.encode(params.E, float(params.decay_logit[0]), ctx.sequence)
        conv_cache = ConvolutionCache()
        if use_hg:
            X = params.E[ctx.vertex_index]
            propagation = tape.propagation
            X_conv = hyperedge_convolution(X, propagation, params.theta, settings.activation, cache=conv_cache)
            r = readout_weights(tape.d, ~tape.covered)
            R = r.sum()
            u_hg = r @ X_conv / R
            joint = np.concatenate([u_hg, u_base])
            g = sigmoid(params.fusion @ joint + params.fusion_bias)
            u = g * u_hg + (1.0 - g) * u_base
        else:
            u = u_base

        candidates = np.concatenate([[ctx.target], np.asarray(negatives, dtype=np.int64)])
        rows = params.E[candidates]
        clipped = clipped_probabilities(rows @ u)
        scale = 1.0 / candidates.size
        L_pre = float(-(np.log(clipped[0]) + np.log1p(-clipped[1:]).sum()) * scale)

        d_logits = clipped * scale * settings.alpha
        d_logits[0] -= scale * settings.alpha
        du = rows.T @ d_logits
        np.add.at(grads.E, candidates, np.outer(d_logits, u))

        if use_hg:
            dg = du * (u_hg - u_base)
            dz = dg * g * (1.0 - g)
            grads.fusion += np.outer(dz, joint)
            grads.fusion_bias += dz
            d_joint = params.fusion.T @ dz
            d_u_hg = g * du + d_joint[: u.size]
            d_u_base = (1.0 - g) * du + d_joint[u.size :]

            d_X_conv = np.outer(r / R, d_u_hg)
            d_r = (X_conv - u_hg) @ d_u_hg / R
            dd = np.where(tape.covered, d_r, 0.0)
            d_X, grads.theta, dA = hyperedge_convolution_backward(d_X_conv, propagation, params.theta, conv_cache, settings.activation)
            np.add.at(grads.E, ctx.vertex_index, d_X)
        else:
            d_u_base = du

        d_rows, d_logit = encoder.backward(base_cache, d_u_base)
        np.add.at(grads.E, ctx.sequence, d_rows)
        grads.decay_logit[0] += d_logit

    if tape is not None:
        sl = structure_backward(tape, dA=dA, dd=dd, loss_weight=1.0)
        m = ctx.n_edges
        np.add.at(grads.E, ctx.vertex_index, sl.X)
        grads.phi += sl.phi
        grads.gate_vector += sl.gate_vector
        grads.gate_bias[0] += sl.gate_bias
        grads.cut_head[:, :m] += sl.cut_head
        grads.cut_bias[:m] += sl.cut_bias

    if not (np.isfinite(L_str) and np.isfinite(L_pre)):
        raise NumericalError(f"non-finite loss for user {ctx.user_id}")
    if not all_finite(*(array for _, array in grads.items())):
        raise NumericalError(f"non-finite gradient for user {ctx.user_id}")
    return L_str, L_pre, grads, tape


def mean_lambda(tape: Optional[StructureTape]) -> float:
    if tape is None or tape.lam.size == 0 or not np.any(tape.state.has_text):
        return 0.0
    return float(tape.lam[tape.state.has_text].mean())
