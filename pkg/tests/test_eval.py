from __future__ import annotations

import math

import numpy as np
import pytest

from llmhg.errors import InvalidConfig, TrainingDiverged, UnknownItem
from llmhg.eval import (
    METRIC_NAMES,
    MetricReport,
    cost_improvement_rate,
    evaluate,
    expand_grid,
    hr_at_n,
    improvement_and_cir,
    improvement_pct,
    metric_set,
    ndcg_at_n,
    rank_target,
    ranks_of,
    render_comparison_markdown,
    render_metric_csv,
    render_sensitivity_csv,
    run_seeds,
    sensitivity_sweep,
    validation_hr10,
)
from llmhg.event_bus import EVENT_BUS
from llmhg.fusion import ModelParams, ModelSettings, UserContext


def _report(label, values_by_seed):
    report = MetricReport(label=label)
    for seed, value in values_by_seed.items():
        report.per_seed[seed] = {name: value for name in METRIC_NAMES}
    return report


def test_rank_target_counts_ties_against_the_target():
    scores = np.array([0.1, 0.5, 0.5, 0.2])
    assert rank_target(scores, 1) == 2
    assert rank_target(scores, 2) == 2
    assert rank_target(scores, 0) == 4
    assert rank_target(np.array([3.0, 1.0]), 0) == 1
    with pytest.raises(UnknownItem):
        rank_target(scores, 4)


def test_metrics_match_brute_force():
    rng = np.random.default_rng(0)
    ranks = rng.integers(1, 40, size=1000)
    for n in (5, 10):
        hits = sum(1 for rank in ranks if rank <= n)
        gains = sum(1.0 / math.log2(rank + 1) for rank in ranks if rank <= n)
        assert hr_at_n(ranks, n) == pytest.approx(hits / len(ranks))
        assert ndcg_at_n(ranks, n) == pytest.approx(gains / len(ranks))
        assert ndcg_at_n(ranks, n) <= hr_at_n(ranks, n)
    metrics = metric_set([1, 2, 11])
    assert list(metrics) == ["hr@5", "hr@10", "ndcg@5", "ndcg@10"]
    assert metrics["hr@10"] == pytest.approx(2 / 3)
    assert metrics["ndcg@5"] == pytest.approx((1.0 + 1.0 / math.log2(3)) / 3)
    assert hr_at_n([], 10) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_rank_target_is_invariant_under_monotone_transforms(seed):
    rng = np.random.default_rng(seed)
    scores = np.round(rng.normal(size=50), 1)
    for target in range(0, 50, 7):
        rank = rank_target(scores, target)
        assert rank_target(np.exp(scores), target) == rank
        assert rank_target(3.0 * scores + 2.0, target) == rank
        assert rank_target(np.tanh(scores / 10.0), target) == rank


def test_run_seeds_mean_ignores_seed_order():
    values = {1: 0.13, 2: 0.31, 3: 0.17, 4: 0.29, 5: 0.23}

    def train_eval(seed):
        return {name: values[seed] for name in METRIC_NAMES}

    forward = run_seeds(train_eval, [1, 2, 3, 4, 5])
    shuffled = run_seeds(train_eval, [4, 1, 5, 3, 2])
    assert forward.seeds == shuffled.seeds
    assert forward.mean() == shuffled.mean()


def test_improvement_and_cost_rate_spot_values():
    assert abs(improvement_pct(0.2840, 0.3058) - 7.67) < 0.01
    assert cost_improvement_rate(7.67, 0.0141) == pytest.approx(543.97, abs=0.01)
    with pytest.raises(InvalidConfig):
        improvement_pct(0.0, 0.1)
    with pytest.raises(InvalidConfig):
        cost_improvement_rate(1.0, 0.0)


def test_improvement_and_cir_aggregates_at_ten():
    baseline = MetricReport("base", per_seed={1: {"hr@5": 0.1, "hr@10": 0.2, "ndcg@5": 0.05, "ndcg@10": 0.1}})
    treatment = MetricReport("llm", per_seed={1: {"hr@5": 0.1, "hr@10": 0.22, "ndcg@5": 0.06, "ndcg@10": 0.12}})
    comparison = improvement_and_cir(baseline, treatment, cost_usd=0.5)
    assert comparison.improvement["hr@10"] == pytest.approx(10.0)
    assert comparison.improvement["ndcg@10"] == pytest.approx(20.0)
    assert comparison.aggregate_improvement == pytest.approx(15.0)
    assert comparison.aggregate_cir == pytest.approx(30.0)
    assert comparison.cir["ndcg@5"] == pytest.approx(40.0)

    text = render_comparison_markdown(comparison)
    assert "| HR@10 | 0.2000 | 0.2200 | +10.00% |" in text
    assert "CIR: 30.00" in text

    no_cost = improvement_and_cir(baseline, treatment)
    assert no_cost.aggregate_cir is None and no_cost.cir == {}
    assert "CIR" not in render_comparison_markdown(no_cost)
    with pytest.raises(InvalidConfig):
        improvement_and_cir(baseline, treatment, cost_usd=0.0)


def test_run_seeds_flags_diverged_seeds():
    def train_eval(seed):
        if seed == 2:
            raise TrainingDiverged(3)
        return {name: 0.1 * seed for name in METRIC_NAMES}

    report = run_seeds(train_eval, [3, 2, 1], label="llm")
    assert report.seeds == [1, 3]
    assert report.failed_seeds == [2] and report.incomplete
    assert report.mean()["hr@10"] == pytest.approx(0.2)
    assert EVENT_BUS.count("eval.seed_completed") == 3
    with pytest.raises(ValueError):
        run_seeds(train_eval, [])
    assert all(math.isnan(value) for value in MetricReport("empty").mean().values())


def test_grid_expansion_and_sweep():
    points = expand_grid({"beta": [0.3, 0.7], "d_f": [8, 16]})
    assert points == [
        {"beta": 0.3, "d_f": 8},
        {"beta": 0.3, "d_f": 16},
        {"beta": 0.7, "d_f": 8},
        {"beta": 0.7, "d_f": 16},
    ]
    with pytest.raises(ValueError):
        expand_grid({"beta": []})

    rows = sensitivity_sweep(lambda point: _report(str(point), {1: point["beta"]}), {"beta": [0.3, 0.7]})
    assert [point["beta"] for point, _ in rows] == [0.3, 0.7]
    assert EVENT_BUS.count("sweep.point_completed") == 2
    csv = render_sensitivity_csv(rows).splitlines()
    assert csv[0] == "beta,hr@5,hr@10,ndcg@5,ndcg@10,incomplete"
    assert csv[1] == "0.3,0.300000,0.300000,0.300000,0.300000,0"
    assert render_sensitivity_csv([]) == ""


def test_metric_csv_rows():
    lines = render_metric_csv(_report("llm", {1: 0.25, 2: 0.75})).splitlines()
    assert lines[0] == "metric,seed,value"
    assert "hr@5,1,0.250000" in lines
    assert lines[-1] == "ndcg@10,mean,0.500000"


def _eval_contexts():
    contexts = []
    for k in range(5):
        contexts.append(
            UserContext(
                user_id=f"u{k}",
                sequence=np.array([k, k + 1, k + 2]),
                target=k + 3,
                vertex_index=np.zeros(0, dtype=np.int64),
                H=np.zeros((0, 0)),
                text=np.zeros((0, 4)),
                has_text=np.zeros(0, dtype=bool),
                mu=1.0,
            )
        )
    return contexts


def test_evaluate_is_order_preserving_with_workers():
    params = ModelParams.initialize(12, 4, head_width=1, rng=np.random.default_rng(0))
    settings = ModelSettings(use_hypergraph=False)
    contexts = _eval_contexts()
    serial = evaluate(params, contexts, settings)
    threaded = evaluate(params, contexts, settings, workers=3)
    assert serial == threaded
    assert [result.user_id for result in serial] == [f"u{k}" for k in range(5)]
    ranks = ranks_of(serial)
    assert ranks.min() >= 1 and ranks.max() <= 12
    assert validation_hr10(contexts, settings)(params) == pytest.approx(metric_set(ranks)["hr@10"])
