from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from llmhg.errors import InvalidConfig, UnknownItem

CUTOFFS = (5, 10)
METRIC_NAMES = ("hr@5", "hr@10", "ndcg@5", "ndcg@10")


@dataclass(frozen=True)
class RankResult:
    user_id: str
    target_rank: int


def rank_target(scores: np.ndarray, target: int) -> int:
    """1 + number of other items scoring at least as high as the target."""
    values = np.asarray(scores, dtype=np.float64)
    if not 0 <= target < values.size:
        raise UnknownItem(f"target index {target} outside a catalog of {values.size}")
    return int(np.count_nonzero(values >= values[target]))


def hr_at_n(ranks: Sequence[int] | np.ndarray, n: int) -> float:
    values = np.asarray(ranks)
    if values.size == 0:
        return 0.0
    return float(np.mean(values <= n))


def ndcg_at_n(ranks: Sequence[int] | np.ndarray, n: int) -> float:
    values = np.asarray(ranks, dtype=np.float64)
    if values.size == 0:
        return 0.0
    gains = np.where(values <= n, 1.0 / np.log2(values + 1.0), 0.0)
    return float(gains.mean())


def metric_set(ranks: Sequence[int] | np.ndarray) -> Dict[str, float]:
    metrics: Dict[str, float] = {}
    for n in CUTOFFS:
        metrics[f"hr@{n}"] = hr_at_n(ranks, n)
    for n in CUTOFFS:
        metrics[f"ndcg@{n}"] = ndcg_at_n(ranks, n)
    return metrics


@dataclass
class MetricReport:
    """Per-seed metric values and their mean; ``incomplete`` when some seed diverged."""

    label: str
    per_seed: Dict[int, Dict[str, float]] = field(default_factory=dict)
    failed_seeds: List[int] = field(default_factory=list)
    extras: Dict[str, float] = field(default_factory=dict)

    @property
    def incomplete(self) -> bool:
        return bool(self.failed_seeds)

    @property
    def seeds(self) -> List[int]:
        return sorted(self.per_seed)

    def mean(self) -> Dict[str, float]:
        if not self.per_seed:
            return {name: float("nan") for name in METRIC_NAMES}
        # reduce in seed order
        return {name: float(np.mean([self.per_seed[seed][name] for seed in self.seeds])) for name in METRIC_NAMES}


@dataclass(frozen=True)
class ComparisonReport:
    baseline: MetricReport
    treatment: MetricReport
    improvement: Mapping[str, float]
    aggregate_improvement: float
    cost_usd: float
    cir: Mapping[str, float]
    aggregate_cir: float | None


def improvement_pct(baseline: float, treatment: float) -> float:
    if baseline <= 0:
        raise InvalidConfig(f"baseline metric must be > 0 to compute an improvement, got {baseline}")
    return 100.0 * (treatment - baseline) / baseline


def cost_improvement_rate(improvement: float, cost_usd: float) -> float:
    if cost_usd <= 0:
        raise InvalidConfig(f"CIR needs a positive per-user cost, got {cost_usd}")
    return improvement / cost_usd


def improvement_and_cir(
    baseline: MetricReport,
    treatment: MetricReport,
    cost_usd: Optional[float] = None,
) -> ComparisonReport:
    """Per-metric improvement % and, when ``cost_usd`` is given, improvement per dollar.

    The aggregate improvement averages the HR@10 and NDCG@10 improvements.
    """
    base, treat = baseline.mean(), treatment.mean()
    improvement = {name: improvement_pct(base[name], treat[name]) for name in METRIC_NAMES if base[name] > 0}
    at_ten = [improvement[name] for name in ("hr@10", "ndcg@10") if name in improvement]
    aggregate = float(np.mean(at_ten)) if at_ten else float("nan")
    cir: Dict[str, float] = {}
    aggregate_cir = None
    if cost_usd is not None:
        if cost_usd <= 0:
            raise InvalidConfig(f"CIR requested with a non-positive cost ({cost_usd})")
        cir = {name: cost_improvement_rate(value, cost_usd) for name, value in improvement.items()}
        if at_ten:
            aggregate_cir = cost_improvement_rate(aggregate, cost_usd)
    return ComparisonReport(
        baseline=baseline,
        treatment=treatment,
        improvement=improvement,
        aggregate_improvement=aggregate,
        cost_usd=cost_usd or 0.0,
        cir=cir,
        aggregate_cir=aggregate_cir,
    )
