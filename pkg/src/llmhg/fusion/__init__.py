"""Hyperedge convolution, base encoder, fusion and the joint training loop."""

from .checkpoint import checkpoint_bytes, params_from_bytes, read_checkpoint, write_checkpoint
from .encoder import BaseEncoder, SimpleSeqEncoder
from .layers import (
    fuse,
    hyperedge_convolution,
    predict_scores,
    prediction_loss,
    propagation_matrix,
    readout_user,
)
from .model import ModelSettings, UserContext, build_context, loss_and_gradients, mean_lambda, user_representation
from .params import PARAM_ORDER, ModelParams
from .training import EpochLoss, TrainingResult, render_loss_curve, sample_negatives, train, write_loss_curve

__all__ = [
    "PARAM_ORDER",
    "BaseEncoder",
    "EpochLoss",
    "ModelParams",
    "ModelSettings",
    "SimpleSeqEncoder",
    "TrainingResult",
    "UserContext",
    "build_context",
    "checkpoint_bytes",
    "fuse",
    "hyperedge_convolution",
    "loss_and_gradients",
    "mean_lambda",
    "params_from_bytes",
    "predict_scores",
    "prediction_loss",
    "propagation_matrix",
    "read_checkpoint",
    "readout_user",
    "render_loss_curve",
    "sample_negatives",
    "train",
    "user_representation",
    "write_checkpoint",
    "write_loss_curve",
]
