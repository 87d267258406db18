"""Full-catalog leave-one-out ranking, metrics, seeds, CIR and sweeps."""

from .evaluation import evaluate, expand_grid, ranks_of, run_seeds, sensitivity_sweep, validation_hr10
from .metrics import (
    METRIC_NAMES,
    ComparisonReport,
    MetricReport,
    RankResult,
    cost_improvement_rate,
    hr_at_n,
    improvement_and_cir,
    improvement_pct,
    metric_set,
    ndcg_at_n,
    rank_target,
)
from .reports import render_comparison_markdown, render_metric_csv, render_sensitivity_csv

__all__ = [
    "METRIC_NAMES",
    "ComparisonReport",
    "MetricReport",
    "RankResult",
    "cost_improvement_rate",
    "evaluate",
    "expand_grid",
    "hr_at_n",
    "improvement_and_cir",
    "improvement_pct",
    "metric_set",
    "ndcg_at_n",
    "rank_target",
    "ranks_of",
    "render_comparison_markdown",
    "render_metric_csv",
    "render_sensitivity_csv",
    "run_seeds",
    "sensitivity_sweep",
    "validation_hr10",
]
