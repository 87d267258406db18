from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from llmhg.errors import TrainingDiverged
from llmhg.eval.metrics import MetricReport, RankResult, metric_set, rank_target
from llmhg.event_bus import EVENT_BUS
from llmhg.fusion.encoder import SimpleSeqEncoder
from llmhg.fusion.layers import predict_scores
from llmhg.fusion.model import ModelSettings, UserContext, user_representation
from llmhg.fusion.params import ModelParams

logger = logging.getLogger(__name__)


def evaluate(
    params: ModelParams,
    contexts: Sequence[UserContext],
    settings: ModelSettings,
    *,
    workers: int = 1,
    encoder: Optional[SimpleSeqEncoder] = None,
) -> List[RankResult]:
    """Rank each user's held-out item against the whole catalog. Results keep input order."""
    encoder = encoder or SimpleSeqEncoder()

    def _rank(ctx: UserContext) -> RankResult:
        u = user_representation(params, ctx, settings, encoder)
        return RankResult(ctx.user_id, rank_target(predict_scores(u, params.E), ctx.target))

    if workers <= 1 or len(contexts) < 2:
        return [_rank(ctx) for ctx in contexts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_rank, contexts))


def ranks_of(results: Sequence[RankResult]) -> np.ndarray:
    return np.array([result.target_rank for result in results], dtype=np.int64)


def validation_hr10(
    contexts: Sequence[UserContext],
    settings: ModelSettings,
    *,
    encoder: Optional[SimpleSeqEncoder] = None,
) -> Callable[[ModelParams], float]:
    def _score(params: ModelParams) -> float:
        ranks = ranks_of(evaluate(params, contexts, settings, workers=settings.eval_workers, encoder=encoder))
        return metric_set(ranks)["hr@10"]

    return _score


def run_seeds(
    train_eval: Callable[[int], Mapping[str, float]],
    seeds: Sequence[int],
    *,
    label: str = "run",
) -> MetricReport:
    """One train/evaluate cycle per seed; a diverged seed is recorded and the report flagged."""
    if not seeds:
        raise ValueError("at least one seed is required")
    report = MetricReport(label=label)
    for seed in seeds:
        try:
            metrics = dict(train_eval(seed))
        except TrainingDiverged as exc:
            logger.warning("seed %d of %s diverged: %s", seed, label, exc)
            report.failed_seeds.append(seed)
            EVENT_BUS.emit("eval.seed_completed", {"label": label, "seed": seed, "status": "diverged"})
            continue
        report.per_seed[seed] = metrics
        EVENT_BUS.emit("eval.seed_completed", {"label": label, "seed": seed, "status": "ok", **metrics})
    report.failed_seeds.sort()
    return report


GridPoint = Dict[str, object]


def expand_grid(grid: Mapping[str, Sequence[object]]) -> List[GridPoint]:
    """Cartesian product of the grid, first key varying slowest."""
    if not grid or any(len(values) == 0 for values in grid.values()):
        raise ValueError("sensitivity grid must name at least one non-empty axis")
    points: List[GridPoint] = [{}]
    for key, values in grid.items():
        points = [{**point, key: value} for point in points for value in values]
    return points


def sensitivity_sweep(
    run_point: Callable[[GridPoint], MetricReport],
    grid: Mapping[str, Sequence[object]],
) -> List[Tuple[GridPoint, MetricReport]]:
    rows = []
    for point in expand_grid(grid):
        report = run_point(point)
        EVENT_BUS.emit("sweep.point_completed", {**point, **report.mean(), "incomplete": report.incomplete})
        rows.append((point, report))
    return rows
