from __future__ import annotations

import argparse
import logging
import sys
import time
from typing import List

from llmhg.config import ABLATIONS, HYPERGRAPH_KINDS, RunConfig, load_config, parse_grid, store_path
from llmhg.errors import LlmhgError
from llmhg.eval import METRIC_NAMES, MetricReport
from llmhg.event_bus import EVENT_BUS
from llmhg.orchestrator import (
    RunLog,
    ingest,
    inspect_user,
    render_inspection,
    run_profile,
    sweep,
    train_eval,
)
from llmhg.orchestrator.pipeline import PROFILE_DIR
from llmhg.store import RunStore

logger = logging.getLogger(__name__)


def _config(args: argparse.Namespace) -> RunConfig:
    overrides = list(args.overrides or [])
    for key in ("hypergraph", "ablation"):
        value = getattr(args, key, None)
        if value:
            overrides.append(f"{key}={value}")
    return load_config(args.config, overrides)


def _print_report(report: MetricReport) -> None:
    means = report.mean()
    cells = "  ".join(f"{name.upper()} {means[name]:.4f}" for name in METRIC_NAMES)
    suffix = f"  (diverged seeds: {report.failed_seeds})" if report.incomplete else ""
    print(f"{report.label:<24} {cells}{suffix}")


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _config(args)
    result = ingest(config, stats_only=args.stats_only)
    print(result.stats.as_table(config.dataset_format))
    if result.dump_dir is not None:
        print(f"Dump → {result.dump_dir}")
    return 0


def cmd_profile(args: argparse.Namespace) -> int:
    config = _config(args)
    with RunLog(config.output_path / PROFILE_DIR):
        result = run_profile(config)
    n_edges = sum(hg.n_e for hg in result.hypergraphs.values())
    print(f"{len(result.profiles)} profil(s), {n_edges} hyperarête(s) → {result.directory}")
    if result.cost is not None:
        print(f"Coût total {result.cost.total_usd:.4f} USD, {result.cost.per_user_usd:.6f} USD/utilisateur")
    return 0


def cmd_train_eval(args: argparse.Namespace) -> int:
    config = _config(args)
    if args.sweep:
        return _sweep(config, args.sweep)
    result = train_eval(config, base_only=args.base_only)
    _print_report(result.baseline)
    if result.treatment is not None:
        _print_report(result.treatment)
    if result.initial is not None:
        _print_report(result.initial)
    if result.report_path is not None:
        print(f"Comparaison → {result.report_path}")
    return 0


def _sweep(config: RunConfig, assignments: List[str]) -> int:
    rows, path = sweep(config, parse_grid(assignments))
    for _, report in rows:
        _print_report(report)
    print(f"Sensibilité ({len(rows)} point(s)) → {path}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    return _sweep(_config(args), args.grid)


def cmd_inspect(args: argparse.Namespace) -> int:
    print(render_inspection(inspect_user(args.run_dir, args.user)), end="")
    return 0


def cmd_runs(args: argparse.Namespace) -> int:
    config = _config(args)
    store = RunStore(store_path(config))
    try:
        rows = store.list(limit=args.limit)
    finally:
        store.close()
    header = f"{'Run':<14} {'Command':<11} {'Hypergraph':<24} {'Seed':<5} {'Status':<10} {'Updated':<10} HR@10"
    print(header)
    print("-" * len(header))
    for row in rows:
        updated = time.strftime("%H:%M:%S", time.localtime(row.updated_at))
        seed = "-" if row.seed is None else str(row.seed)
        hr10 = row.metric_values().get("hr@10")
        cell = "-" if hr10 is None else f"{hr10:.4f}"
        print(f"{row.run_id:<14} {row.command:<11} {row.hypergraph:<24} {seed:<5} {row.status:<10} {updated:<10} {cell}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="Fichier key=value")
    common.add_argument("--set", dest="overrides", action="append", metavar="KEY=VALUE", help="Surcharge d'une clé de configuration")
    common.add_argument("--verbose", "-v", action="store_true", help="Logs DEBUG")

    parser = argparse.ArgumentParser(description="LLM-guided multi-view hypergraph experiments")
    subparsers = parser.add_subparsers(dest="command", required=True)

    ingest_parser = subparsers.add_parser("ingest", parents=[common], help="Load a corpus, print its statistics, write the canonical dump")
    ingest_parser.add_argument("--stats-only", action="store_true", help="Print counts without writing dumps")
    ingest_parser.set_defaults(func=cmd_ingest)

    profile_parser = subparsers.add_parser("profile", parents=[common], help="Profile users and dump their hypergraphs")
    profile_parser.set_defaults(func=cmd_profile)

    train_parser = subparsers.add_parser("train-eval", parents=[common], help="Train and evaluate over seeds against the base encoder")
    train_parser.add_argument("--hypergraph", choices=HYPERGRAPH_KINDS)
    train_parser.add_argument("--ablation", choices=ABLATIONS)
    train_parser.add_argument("--base-only", action="store_true", help="Only train the base sequence encoder")
    train_parser.add_argument("--sweep", nargs="+", metavar="KEY=V1,V2", help="Run a sensitivity grid instead")
    train_parser.set_defaults(func=cmd_train_eval)

    sweep_parser = subparsers.add_parser("sweep", parents=[common], help="Sensitivity grid over config keys")
    sweep_parser.add_argument("--grid", nargs="+", required=True, metavar="KEY=V1,V2")
    sweep_parser.add_argument("--hypergraph", choices=HYPERGRAPH_KINDS)
    sweep_parser.add_argument("--ablation", choices=ABLATIONS)
    sweep_parser.set_defaults(func=cmd_sweep)

    inspect_parser = subparsers.add_parser("inspect", parents=[common], help="Show one user's angles, edges, weights and prototypes")
    inspect_parser.add_argument("run_dir", help="Seed directory, e.g. runs/llm/seed1")
    inspect_parser.add_argument("user")
    inspect_parser.set_defaults(func=cmd_inspect)

    runs_parser = subparsers.add_parser("runs", parents=[common], help="List the run registry")
    runs_parser.add_argument("--limit", type=int, default=None)
    runs_parser.set_defaults(func=cmd_runs)

    return parser


def main(argv: List[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except LlmhgError as exc:
        if exc.exit_code == 1:
            raise
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    finally:
        _log_event_summary()


def _log_event_summary() -> None:
    stats = EVENT_BUS.get_stats()
    if stats:
        logger.info("events: %s", ", ".join(f"{entry.event}={entry.count}" for entry in stats))


if __name__ == "__main__":  # pragma: no cover - manual usage
    sys.exit(main())
