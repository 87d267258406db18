from __future__ import annotations

from typing import Dict, List, Mapping, Sequence, Tuple

from llmhg.eval.metrics import METRIC_NAMES, ComparisonReport, MetricReport

DISPLAY = {"hr@5": "HR@5", "hr@10": "HR@10", "ndcg@5": "NDCG@5", "ndcg@10": "NDCG@10"}


def render_metric_csv(report: MetricReport) -> str:
    """``metric,seed,value`` rows per seed, then one ``mean`` row per metric."""
    lines = ["metric,seed,value"]
    for name in METRIC_NAMES:
        for seed in report.seeds:
            lines.append(f"{name},{seed},{report.per_seed[seed][name]:.6f}")
    means = report.mean()
    for name in METRIC_NAMES:
        lines.append(f"{name},mean,{means[name]:.6f}")
    return "\n".join(lines) + "\n"


def _signed(value: float) -> str:
    return f"{value:+.2f}%"


def render_comparison_markdown(comparison: ComparisonReport) -> str:
    base, treat = comparison.baseline.mean(), comparison.treatment.mean()
    lines = [
        f"| Metric | {comparison.baseline.label} | {comparison.treatment.label} | Improv. |",
        "|---|---|---|---|",
    ]
    for name in METRIC_NAMES:
        improvement = comparison.improvement.get(name)
        cell = _signed(improvement) if improvement is not None else "n/a"
        lines.append(f"| {DISPLAY[name]} | {base[name]:.4f} | {treat[name]:.4f} | {cell} |")
    lines.append("")
    lines.append(f"Imp (mean of HR@10 and NDCG@10): {_signed(comparison.aggregate_improvement)}")
    if comparison.cost_usd > 0:
        lines.append(f"Cost per user (USD): {comparison.cost_usd:.4f}")
    if comparison.aggregate_cir is not None:
        lines.append(f"CIR: {comparison.aggregate_cir:.2f}")
        lines.append("CIR per metric: " + ", ".join(f"{DISPLAY[name]} {value:.2f}" for name, value in comparison.cir.items()))
    for report in (comparison.baseline, comparison.treatment):
        if report.incomplete:
            lines.append(f"Incomplete: {report.label} diverged on seeds {report.failed_seeds}")
    return "\n".join(lines) + "\n"


def render_sensitivity_csv(rows: Sequence[Tuple[Mapping[str, object], MetricReport]]) -> str:
    if not rows:
        return ""
    axes = list(rows[0][0].keys())
    lines = [",".join([*axes, *METRIC_NAMES, "incomplete"])]
    for point, report in rows:
        means: Dict[str, float] = report.mean()
        cells: List[str] = [str(point[axis]) for axis in axes]
        cells.extend(f"{means[name]:.6f}" for name in METRIC_NAMES)
        cells.append("1" if report.incomplete else "0")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
