from __future__ import annotations

import logging

import pytest

from llmhg.cli import build_parser, main
from llmhg.config import STORE_PATH_ENV


@pytest.fixture(autouse=True)
def default_store_path(monkeypatch):
    monkeypatch.delenv(STORE_PATH_ENV, raising=False)


@pytest.fixture
def config_file(tmp_path, make_config):
    def _write(**changes):
        path = tmp_path / "run.conf"
        path.write_text("# test run\n" + "\n".join(make_config(**changes).to_lines()) + "\n", encoding="utf-8")
        return str(path)

    return _write


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
    args = build_parser().parse_args(["train-eval", "--set", "beta=0.5", "--set", "alpha=0.2", "--base-only"])
    assert args.overrides == ["beta=0.5", "alpha=0.2"] and args.base_only


def test_ingest_stats_only(tmp_path, config_file, capsys):
    assert main(["ingest", "-c", config_file(), "--stats-only"]) == 0
    out = capsys.readouterr().out
    assert "# Users" in out and "24" in out
    assert "Dump" not in out
    assert not (tmp_path / "runs" / "dataset").exists()


def test_input_errors_exit_with_two(tmp_path, capsys):
    assert main(["ingest", "-c", str(tmp_path / "missing.conf")]) == 2
    assert "DataIoError" in capsys.readouterr().err

    assert main(["ingest", "--set", "beta=2"]) == 2
    assert "InvalidConfig" in capsys.readouterr().err

    code = main(
        [
            "ingest",
            "--set", "dataset_format=movielens",
            "--set", f"ratings_path={tmp_path / 'ratings.dat'}",
            "--set", f"movies_path={tmp_path / 'movies.dat'}",
        ]
    )
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_replay_without_fixtures_exits_with_three(tmp_path, config_file, capsys):
    fixtures = tmp_path / "empty.jsonl"
    fixtures.write_text("", encoding="utf-8")
    assert main(["profile", "-c", config_file(llm_mode="replay", fixture_path=str(fixtures))]) == 3
    assert "FixtureMiss" in capsys.readouterr().err


def test_profile_reports_edges(tmp_path, config_file, capsys, caplog):
    caplog.set_level(logging.INFO, logger="llmhg.cli.app")
    assert main(["profile", "-c", config_file(), "-v"]) == 0
    assert "24 profil(s)" in capsys.readouterr().out
    assert (tmp_path / "runs" / "profile" / "events.ndjson").is_file()
    assert "profile.user_profiled=24" in caplog.text


def test_train_eval_inspect_and_runs(tmp_path, config_file, capsys):
    conf = config_file()
    assert main(["train-eval", "-c", conf, "--hypergraph", "transition"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("base-only")
    assert "Comparaison" in out
    assert (tmp_path / "runs" / "transition" / "comparison.md").is_file()

    seed_dir = tmp_path / "runs" / "transition" / "seed1"
    user = sorted(path.stem for path in (seed_dir / "weights").glob("*.tsv"))[0]
    assert main(["inspect", str(seed_dir), user]) == 0
    assert capsys.readouterr().out.startswith(f"user {user}\n")

    assert main(["inspect", str(seed_dir), "nobody"]) == 5
    assert "UnknownUser" in capsys.readouterr().err
    assert main(["inspect", str(tmp_path / "runs" / "base-only" / "seed1"), user]) == 2

    assert main(["runs", "-c", conf, "--limit", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("Run")
    assert len(lines) == 4
    assert sum("completed" in line for line in lines[2:]) == 2


def test_sweep_command(tmp_path, config_file, capsys):
    assert main(["sweep", "-c", config_file(), "--hypergraph", "transition", "--grid", "beta=0.2,0.8"]) == 0
    out = capsys.readouterr().out
    assert "Sensibilité (2 point(s))" in out
    assert (tmp_path / "runs" / "sensitivity.csv").is_file()

    assert main(["sweep", "-c", config_file(), "--grid", "seeds=1,2"]) == 2
