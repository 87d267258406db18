from __future__ import annotations

import json

from llmhg.event_bus import EventBus
from llmhg.orchestrator import RunLog
from llmhg.store import RunStore


def test_run_lifecycle(tmp_path):
    store = RunStore(tmp_path / "nested" / "runs.db")
    try:
        run_id = store.start(command="train-eval", hypergraph="llm", seed=1)
        row = store.get(run_id)
        assert row.status == "running" and row.seed == 1 and row.metrics is None

        store.finish(run_id, metrics={"hr@10": 0.25, "ndcg@10": 0.125})
        row = store.get(run_id)
        assert row.status == "completed"
        assert row.metric_values() == {"hr@10": 0.25, "ndcg@10": 0.125}
        assert row.updated_at >= row.created_at

        failed = store.start(command="sweep", hypergraph="sweep/beta-0.3")
        store.finish(failed, status="diverged", error="Training diverged at epoch 2")
        assert store.get(failed).error.startswith("Training diverged")
        assert store.get(failed).seed is None
        assert store.get("missing") is None
    finally:
        store.close()


def test_list_survives_reopen(tmp_path):
    path = tmp_path / "runs.db"
    store = RunStore(path)
    ids = [store.start(command="train-eval", hypergraph="base-only", seed=seed) for seed in (1, 2, 3)]
    store.close()

    reopened = RunStore(path)
    try:
        rows = reopened.list()
        assert {row.run_id for row in rows} == set(ids)
        assert len(reopened.list(limit=2)) == 2
        assert reopened.path == path
    finally:
        reopened.close()


def test_run_log_mirrors_events(tmp_path):
    bus = EventBus()
    with RunLog(tmp_path / "run", bus=bus):
        bus.emit("train.epoch", {"epoch": 1, "L": 0.5})
        bus.emit("eval.seed_completed", {"seed": 1, "status": "ok"})
    bus.emit("train.epoch", {"epoch": 2})

    lines = [json.loads(line) for line in (tmp_path / "run" / "events.ndjson").read_text(encoding="utf-8").splitlines()]
    assert [line["event"] for line in lines] == ["train.epoch", "eval.seed_completed"]
    assert lines[0]["payload"] == {"epoch": 1, "L": 0.5}
    assert all(isinstance(line["ts"], float) for line in lines)


def test_event_bus_basics():
    bus = EventBus()
    seen = []
    unsubscribe = bus.subscribe("x", seen.append)
    bus.subscribe("x", lambda payload: 1 / 0)
    bus.emit("x", {"n": 1})
    bus.emit("y")
    unsubscribe()
    bus.emit("x", {"n": 2})
    assert seen == [{"n": 1}]
    assert bus.count("x") == 2
    assert [(stats.event, stats.count) for stats in bus.get_stats()] == [("x", 2), ("y", 1)]
    bus.reset()
    assert bus.get_stats() == []
