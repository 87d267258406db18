"""Hyperedge prototypes, kernel re-weighting and the spectral structure loss."""

from .loss import StructureGrads, StructureTape, sl_gradients, structure_backward, structure_forward, structure_loss
from .prototypes import corrected_prototypes, gate_lambda, initial_prototypes, prototype_corrected, prototype_initial
from .types import CutPredictor, GateParams, KernelParams, PrototypeSet, SLHyperparams, StructureState
from .weights import (
    WEIGHT_FLOOR,
    edge_weights,
    hyperedge_weight,
    inter_separation,
    intra_cohesion,
    median_bandwidth,
    squared_distances,
)

__all__ = [
    "WEIGHT_FLOOR",
    "CutPredictor",
    "GateParams",
    "KernelParams",
    "PrototypeSet",
    "SLHyperparams",
    "StructureGrads",
    "StructureState",
    "StructureTape",
    "corrected_prototypes",
    "edge_weights",
    "gate_lambda",
    "hyperedge_weight",
    "initial_prototypes",
    "inter_separation",
    "intra_cohesion",
    "median_bandwidth",
    "prototype_corrected",
    "prototype_initial",
    "sl_gradients",
    "squared_distances",
    "structure_backward",
    "structure_forward",
    "structure_loss",
]
