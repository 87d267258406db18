"""Pipeline stages and the commands built on them: ingest, profile, train-eval, sweep, inspect."""

from .experiment import Experiment, TrainEvalResult, run_experiment, run_seed, sweep, train_eval
from .inspection import UserInspection, inspect_user, render_inspection
from .pipeline import IngestResult, ProfileResult, build_hypergraphs, ingest, prepare_split, run_profile
from .run_log import RunLog

__all__ = [
    "Experiment",
    "IngestResult",
    "ProfileResult",
    "RunLog",
    "TrainEvalResult",
    "UserInspection",
    "build_hypergraphs",
    "ingest",
    "inspect_user",
    "prepare_split",
    "render_inspection",
    "run_experiment",
    "run_profile",
    "run_seed",
    "sweep",
    "train_eval",
]
