"""Train/evaluate runs over seeds, baseline comparison and sensitivity sweeps.

Output layout for one experiment label::

    <output_dir>/<label>/
        events.ndjson  metrics.csv  epoch0.csv  comparison.md
        hypergraphs/<user>.tsv
        seed<k>/checkpoint.bin  model.json  loss_curve.csv  bandwidths.tsv  lambda.tsv
        seed<k>/weights/<user>.tsv
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from llmhg.config import RunConfig, store_path
from llmhg.dataset import SplitDataset, UserSplit
from llmhg.errors import InvalidUsage, TrainingDiverged
from llmhg.eval import (
    ComparisonReport,
    MetricReport,
    evaluate,
    improvement_and_cir,
    metric_set,
    ranks_of,
    render_comparison_markdown,
    render_metric_csv,
    render_sensitivity_csv,
    run_seeds,
    sensitivity_sweep,
    validation_hr10,
)
from llmhg.fusion import (
    ModelParams,
    ModelSettings,
    SimpleSeqEncoder,
    TrainingResult,
    UserContext,
    build_context,
    mean_lambda,
    train,
    write_checkpoint,
    write_loss_curve,
)
from llmhg.fusion.model import structure_state
from llmhg.hypergraph import MultiViewHypergraph, render_weights, restrict
from llmhg.orchestrator import pipeline
from llmhg.orchestrator.run_log import RunLog
from llmhg.profile import LlmClient, UserProfile
from llmhg.store import RunStore
from llmhg.structure import median_bandwidth, structure_forward
from llmhg.utils import write_text_atomic

logger = logging.getLogger(__name__)

BASELINE_LABEL = "base-only"
PHASES = ("train", "valid", "test")
METRICS_FILE = "metrics.csv"
EPOCH0_FILE = "epoch0.csv"
COMPARISON_FILE = "comparison.md"
SENSITIVITY_FILE = "sensitivity.csv"
BANDWIDTHS_FILE = "bandwidths.tsv"
LAMBDA_FILE = "lambda.tsv"
LOSS_CURVE_FILE = "loss_curve.csv"
WEIGHTS_DIR = "weights"


def experiment_label(config: RunConfig) -> str:
    if config.ablation != "none":
        return f"{config.hypergraph}-{config.ablation}"
    if config.text_augment and config.hypergraph != "llm-augment":
        return f"{config.hypergraph}+text"
    return config.hypergraph


@dataclass
class Experiment:
    """One model variant on one split; ``hypergraphs`` is empty for base-encoder runs."""

    config: RunConfig
    split: SplitDataset
    hypergraphs: Dict[str, MultiViewHypergraph]
    settings: ModelSettings
    label: str
    text_table: Optional[np.ndarray] = None

    @classmethod
    def create(
        cls,
        config: RunConfig,
        split: SplitDataset,
        hypergraphs: Optional[Mapping[str, MultiViewHypergraph]] = None,
        *,
        base_only: bool = False,
        label: Optional[str] = None,
    ) -> "Experiment":
        text_table = None
        if not base_only and (config.text_augment or config.hypergraph == "llm-augment"):
            text_table = pipeline.item_text_table(split, config.d_f)
        return cls(
            config=config,
            split=split,
            hypergraphs={} if base_only else dict(hypergraphs or {}),
            settings=ModelSettings.from_config(config, base_only=base_only),
            label=label or (BASELINE_LABEL if base_only else experiment_label(config)),
            text_table=text_table,
        )

    @property
    def run_dir(self) -> Path:
        return self.config.output_path / self.label

    @property
    def head_width(self) -> int:
        return max([hg.n_e for hg in self.hypergraphs.values()] + [1])

    @property
    def text_edges(self) -> bool:
        return self.config.hypergraph in pipeline.TEXT_EDGE_KINDS and bool(self.hypergraphs)

    def encoder(self) -> SimpleSeqEncoder:
        return SimpleSeqEncoder(self.text_table)


def phase_inputs(user_split: UserSplit, phase: str) -> Optional[Tuple[Tuple[str, ...], str]]:
    """(visible items, target) of one phase; None when the train prefix is too short to predict from."""
    if phase == "train":
        if len(user_split.train) < 2:
            return None
        return user_split.train[:-1], user_split.train[-1]
    if phase == "valid":
        return user_split.train, user_split.valid
    if phase == "test":
        return user_split.history, user_split.test
    raise InvalidUsage(f"unknown phase {phase!r}")


def initial_bandwidths(experiment: Experiment, params: ModelParams) -> Dict[str, float]:
    """Per-user heat-kernel bandwidth from the initial item vectors on the full-history hypergraph."""
    config = experiment.config
    index = experiment.split.item_index()
    bandwidths: Dict[str, float] = {}
    for user_id, hypergraph in experiment.hypergraphs.items():
        if config.mu_policy == "fixed":
            bandwidths[user_id] = config.mu
            continue
        ctx = build_context(user_id, hypergraph, experiment.split.users[user_id].history, None, index, d_f=config.d_f)
        Y = params.E[ctx.vertex_index] @ params.phi.T
        bandwidths[user_id] = median_bandwidth(Y, ctx.H, fallback=config.mu)
    return bandwidths


def build_phase_contexts(experiment: Experiment, phase: str, bandwidths: Mapping[str, float]) -> List[UserContext]:
    index = experiment.split.item_index()
    contexts: List[UserContext] = []
    for user_id, user_split in experiment.split.users.items():
        inputs = phase_inputs(user_split, phase)
        if inputs is None:
            continue
        visible, target = inputs
        contexts.append(
            build_context(
                user_id,
                experiment.hypergraphs.get(user_id),
                visible,
                target,
                index,
                d_f=experiment.config.d_f,
                mu=bandwidths.get(user_id, experiment.config.mu),
            )
        )
    return contexts


@dataclass
class SeedOutcome:
    seed: int
    training: TrainingResult
    metrics: Dict[str, float]
    initial_metrics: Dict[str, float]
    bandwidths: Dict[str, float]
    test_contexts: List[UserContext] = field(default_factory=list, repr=False)

    @property
    def params(self) -> ModelParams:
        return self.training.params


def run_seed(experiment: Experiment, seed: int) -> SeedOutcome:
    settings = experiment.settings
    params = ModelParams.initialize(
        experiment.split.n_items,
        experiment.config.d_f,
        head_width=experiment.head_width,
        n_layers=settings.conv_layers,
        rng=np.random.default_rng(seed),
    )
    bandwidths = initial_bandwidths(experiment, params)
    contexts = {phase: build_phase_contexts(experiment, phase, bandwidths) for phase in PHASES}
    encoder = experiment.encoder()

    def _test_metrics(current: ModelParams) -> Dict[str, float]:
        results = evaluate(current, contexts["test"], settings, workers=settings.eval_workers, encoder=encoder)
        return metric_set(ranks_of(results))

    initial = _test_metrics(params)
    validator = validation_hr10(contexts["valid"], settings, encoder=encoder)
    training = train(params, contexts["train"], settings, seed=seed, validator=validator, encoder=encoder)
    metrics = _test_metrics(training.params)
    logger.info(
        "%s seed %d: HR@10 %.4f (epoch 0: %.4f), best epoch %d",
        experiment.label,
        seed,
        metrics["hr@10"],
        initial["hr@10"],
        training.best_epoch,
    )
    return SeedOutcome(seed, training, metrics, initial, bandwidths, contexts["test"])


def write_seed_outputs(directory: Path, experiment: Experiment, outcome: SeedOutcome) -> Path:
    settings = experiment.settings
    params = outcome.params
    write_checkpoint(
        directory,
        params,
        experiment.split.item_order,
        label=experiment.label,
        seed=outcome.seed,
        hypergraph=experiment.config.hypergraph if experiment.hypergraphs else "none",
        text_edges=experiment.text_edges,
        settings=dataclasses.asdict(settings),
        best_epoch=outcome.training.best_epoch,
        epochs_run=outcome.training.epochs_run,
        stopped_early=outcome.training.stopped_early,
        metrics=outcome.metrics,
    )
    write_loss_curve(directory / LOSS_CURVE_FILE, outcome.training.curve)
    write_text_atomic(
        directory / BANDWIDTHS_FILE,
        "".join(f"{user}\t{mu:.10g}\n" for user, mu in outcome.bandwidths.items()),
    )

    lambda_lines: List[str] = []
    for ctx in outcome.test_contexts:
        hypergraph = experiment.hypergraphs.get(ctx.user_id)
        if hypergraph is None or not settings.use_hypergraph:
            continue
        tape = structure_forward(structure_state(params, ctx, settings, with_loss=False))
        visible = restrict(hypergraph, experiment.split.users[ctx.user_id].history)
        write_text_atomic(directory / WEIGHTS_DIR / f"{ctx.user_id}.tsv", render_weights(visible.edges, tape.w))
        lambda_lines.append(f"{ctx.user_id}\t{mean_lambda(tape):.10g}\n")
    if lambda_lines:
        write_text_atomic(directory / LAMBDA_FILE, "".join(lambda_lines))
    return directory


def run_experiment(experiment: Experiment, *, store: Optional[RunStore] = None, command: str = "train-eval") -> Tuple[MetricReport, MetricReport]:
    """(test report, epoch-0 test report) over the configured seeds; outputs under ``run_dir``."""
    root = experiment.run_dir
    if experiment.hypergraphs:
        pipeline.write_hypergraphs(root / pipeline.HYPERGRAPH_DIR, experiment.hypergraphs)
    epoch0 = MetricReport(label=f"{experiment.label}@epoch0")

    def _seed(seed: int) -> Dict[str, float]:
        run_id = store.start(command=command, hypergraph=experiment.label, seed=seed) if store else None
        try:
            outcome = run_seed(experiment, seed)
            write_seed_outputs(root / f"seed{seed}", experiment, outcome)
        except Exception as exc:
            if store and run_id:
                status = "diverged" if isinstance(exc, TrainingDiverged) else "failed"
                store.finish(run_id, status=status, error=str(exc))
            raise
        epoch0.per_seed[seed] = outcome.initial_metrics
        if store and run_id:
            store.finish(run_id, metrics=outcome.metrics)
        return outcome.metrics

    with RunLog(root):
        report = run_seeds(_seed, experiment.config.seeds, label=experiment.label)
    write_text_atomic(root / METRICS_FILE, render_metric_csv(report))
    write_text_atomic(root / EPOCH0_FILE, render_metric_csv(epoch0))
    return report, epoch0


@dataclass
class TrainEvalResult:
    baseline: MetricReport
    treatment: Optional[MetricReport] = None
    initial: Optional[MetricReport] = None
    comparison: Optional[ComparisonReport] = None
    report_path: Optional[Path] = None


def treatment_hypergraphs(
    config: RunConfig,
    split: SplitDataset,
    *,
    client: Optional[LlmClient] = None,
) -> Tuple[Dict[str, MultiViewHypergraph], Optional[Dict[str, UserProfile]]]:
    profiles = pipeline.load_or_profile(config, split, client=client) if config.hypergraph == "llm" else None
    return pipeline.build_hypergraphs(config, split, profiles), profiles


def train_eval(
    config: RunConfig,
    *,
    base_only: bool = False,
    client: Optional[LlmClient] = None,
    store: Optional[RunStore] = None,
) -> TrainEvalResult:
    """Base-encoder baseline, then (unless ``base_only``) the configured variant and the comparison."""
    split = pipeline.prepare_split(config)
    own_store = store is None
    store = store or RunStore(store_path(config))
    try:
        baseline, _ = run_experiment(Experiment.create(config, split, base_only=True), store=store)
        if base_only:
            return TrainEvalResult(baseline=baseline)
        hypergraphs, profiles = treatment_hypergraphs(config, split, client=client)
        experiment = Experiment.create(config, split, hypergraphs)
        treatment, initial = run_experiment(experiment, store=store)
    finally:
        if own_store:
            store.close()

    cost = pipeline.per_user_cost(config, profiles) if profiles else None
    cost_usd = cost.per_user_usd if cost is not None and cost.per_user_usd > 0 else None
    comparison = improvement_and_cir(baseline, treatment, cost_usd)
    report_path = write_text_atomic(experiment.run_dir / COMPARISON_FILE, render_comparison_markdown(comparison))
    return TrainEvalResult(baseline=baseline, treatment=treatment, initial=initial, comparison=comparison, report_path=report_path)


def point_label(point: Mapping[str, object]) -> str:
    return "sweep/" + "_".join(f"{key}-{value}" for key, value in point.items())


def sweep(
    config: RunConfig,
    grid: Mapping[str, Sequence[object]],
    *,
    client: Optional[LlmClient] = None,
    store: Optional[RunStore] = None,
) -> Tuple[List[Tuple[Dict[str, object], MetricReport]], Path]:
    """One multi-seed run per grid point; the table lands in ``<output>/sensitivity.csv``."""
    own_store = store is None
    store = store or RunStore(store_path(config))

    def _point(point: Dict[str, object]) -> MetricReport:
        point_config = config.replace(**point).validate()
        split = pipeline.prepare_split(point_config)
        hypergraphs, _ = treatment_hypergraphs(point_config, split, client=client)
        experiment = Experiment.create(point_config, split, hypergraphs, label=point_label(point))
        report, _ = run_experiment(experiment, store=store, command="sweep")
        return report

    try:
        rows = sensitivity_sweep(_point, grid)
    finally:
        if own_store:
            store.close()
    path = write_text_atomic(config.output_path / SENSITIVITY_FILE, render_sensitivity_csv(rows))
    return rows, path
