from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from llmhg.errors import NumericalError, TrainingDiverged
from llmhg.event_bus import EVENT_BUS
from llmhg.fusion.encoder import SimpleSeqEncoder
from llmhg.fusion.model import ModelSettings, UserContext, loss_and_gradients, mean_lambda
from llmhg.fusion.params import ModelParams
from llmhg.utils import write_text_atomic

logger = logging.getLogger(__name__)

# params -> validation HR@10
Validator = Callable[[ModelParams], float]


@dataclass(frozen=True)
class EpochLoss:
    epoch: int
    L_str: float
    L_pre: float
    L: float


@dataclass
class TrainingResult:
    params: ModelParams
    curve: List[EpochLoss] = field(default_factory=list)
    validation: List[float] = field(default_factory=list)
    best_epoch: int = 0
    epochs_run: int = 0
    stopped_early: bool = False
    lambdas: Dict[str, float] = field(default_factory=dict)

    @property
    def initial_validation(self) -> Optional[float]:
        return self.validation[0] if self.validation else None


def sample_negatives(rng: np.random.Generator, n_items: int, target: int, count: int) -> np.ndarray:
    """``count`` uniform draws from the catalog minus the target (with replacement)."""
    if n_items < 2:
        raise NumericalError("negative sampling needs at least two items")
    draws = rng.integers(0, n_items - 1, size=count)
    return draws + (draws >= target)


def train(
    params: ModelParams,
    contexts: Sequence[UserContext],
    settings: ModelSettings,
    *,
    seed: int,
    validator: Optional[Validator] = None,
    encoder: Optional[SimpleSeqEncoder] = None,
) -> TrainingResult:
    """Per-user gradient steps over shuffled users, early-stopped on validation HR@10.

    ``params`` is updated in place; the returned result holds a copy of the best ones.
    Hyperedge weights are recomputed every ``weight_refresh_every`` epochs; in between the
    cached weights are used as constants.
    """
    encoder = encoder or SimpleSeqEncoder()
    rng = np.random.default_rng(seed)
    result = TrainingResult(params=params.copy())
    best_score = -np.inf
    if validator is not None:
        best_score = validator(params)
        result.validation.append(best_score)
    stale = 0
    cached_weights: Dict[str, np.ndarray] = {}

    for epoch in range(1, settings.epochs + 1):
        refresh = (epoch - 1) % settings.weight_refresh_every == 0
        order = rng.permutation(len(contexts))
        totals = np.zeros(2)
        lambdas: Dict[str, float] = {}
        for position in order:
            ctx = contexts[position]
            negatives = sample_negatives(rng, params.n_items, ctx.target, settings.negatives)
            fixed = None if refresh else cached_weights.get(ctx.user_id)
            try:
                L_str, L_pre, grads, tape = loss_and_gradients(params, ctx, settings, negatives, encoder=encoder, fixed_weights=fixed)
            except NumericalError as exc:
                EVENT_BUS.emit("train.diverged", {"epoch": epoch, "user": ctx.user_id, "detail": str(exc)})
                raise TrainingDiverged(epoch, str(exc)) from exc
            if tape is not None:
                if refresh:
                    cached_weights[ctx.user_id] = tape.w
                lambdas[ctx.user_id] = mean_lambda(tape)
            totals += (L_str, L_pre)
            params.step(grads, settings.learning_rate)

        mean_str, mean_pre = (totals / max(1, len(contexts))).tolist()
        loss = mean_str + settings.alpha * mean_pre
        if not np.isfinite(loss):
            EVENT_BUS.emit("train.diverged", {"epoch": epoch, "detail": "loss is not finite"})
            raise TrainingDiverged(epoch)
        result.curve.append(EpochLoss(epoch, mean_str, mean_pre, loss))
        result.epochs_run = epoch
        result.lambdas = lambdas

        payload: Dict[str, object] = {"epoch": epoch, "L_str": mean_str, "L_pre": mean_pre, "L": loss}
        if validator is None:
            result.params = params.copy()
            result.best_epoch = epoch
            EVENT_BUS.emit("train.epoch", payload)
            continue
        score = validator(params)
        result.validation.append(score)
        payload["valid_hr10"] = score
        EVENT_BUS.emit("train.epoch", payload)
        logger.debug("epoch %d L=%.5f valid HR@10=%.4f", epoch, loss, score)
        if score > best_score:
            best_score, stale = score, 0
            result.params = params.copy()
            result.best_epoch = epoch
        else:
            stale += 1
            if stale >= settings.patience:
                result.stopped_early = True
                EVENT_BUS.emit("train.early_stop", {"epoch": epoch, "best_epoch": result.best_epoch, "best": best_score})
                break
    return result


def render_loss_curve(curve: Sequence[EpochLoss]) -> str:
    lines = ["epoch,L_str,L_pre,L"]
    lines.extend(f"{row.epoch},{row.L_str:.10g},{row.L_pre:.10g},{row.L:.10g}" for row in curve)
    return "\n".join(lines) + "\n"


def write_loss_curve(path: Path | str, curve: Sequence[EpochLoss]) -> Path:
    return write_text_atomic(path, render_loss_curve(curve))
