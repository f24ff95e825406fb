"""
Command-line interface for esp-optimizer.

Subcommands:
  run           Execute an experiment and write one trace file per seed
  summarize     Aggregate a directory of traces into per-iteration statistics
  bench-oracle  Recompute the benchmark minima by grid search plus L-BFGS-B
  experts       Report expert selection frequencies from the results store

Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from esp_optimizer.config import Config
from esp_optimizer.database.connection import DatabaseConnection
from esp_optimizer.harness.experiment import METRICS, Method
from esp_optimizer.harness.oracle import run_bench_oracle
from esp_optimizer.harness.runner import run_experiment
from esp_optimizer.harness.store import expert_selection_frequencies
from esp_optimizer.harness.summary import summarize_directory
from esp_optimizer.testbed.functions import get_objective
from esp_optimizer.utils.logger import get_logger, setup_logging

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
ORACLE_TOLERANCE = 1e-4


class UsageError(Exception):
    """Raised instead of exiting when the command line cannot be parsed."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="esp-opt",
        description="Entropy Search Portfolio Bayesian optimization and benchmark harness",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Five ESP runs on Branin with 30 evaluations each
  esp-opt run --objective branin --method esp --horizon 30 --seeds 0..4 --out results/

  # Hedge with nine extra random experts on Hartmann 3
  esp-opt run --objective hartmann3 --method hedge --n-random-experts 9 --seeds 0..9

  # Nearest-neighbour objective from a point cloud, settings from a file
  esp-opt run --objective csv:data/cloud.csv --config config/experiment.yaml

  # Mean and standard error per iteration for every method in a directory
  esp-opt summarize results/

  # Check the stored benchmark minima
  esp-opt bench-oracle

  # Which experts did each portfolio pick?
  esp-opt experts --db sqlite:///results/runs.db --method esp
        """,
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable DEBUG level logging")
    parser.add_argument("--log-file", type=str, help="Also write log records to this file")

    subparsers = parser.add_subparsers(dest="command", parser_class=_Parser)
    subparsers.required = True

    run = subparsers.add_parser("run", help="Run an experiment")
    run.add_argument("--objective", help="branin, hartmann3 or csv:<path>")
    run.add_argument("--method", choices=[m.value for m in Method], help="Method (default: esp)")
    run.add_argument("--horizon", type=int, help="Total evaluations T (default: 100)")
    run.add_argument("--n-init", type=int, help="Initial uniform-random evaluations (default: 2)")
    run.add_argument("--seeds", help="Seeds as a..b (inclusive) or a comma list (default: 0..24)")
    run.add_argument("--n-random-experts", type=int, help="Random experts added to a portfolio")
    run.add_argument("--noise-sd", type=float, help="Observation noise standard deviation")
    run.add_argument("--out", help="Output directory for trace files (default: results)")
    run.add_argument("--db", help="SQLAlchemy URL of the results store")
    run.add_argument("--record-wall-time", action="store_true", default=None,
                     help="Add a wall_time column to trace files")
    run.add_argument("--config", help="YAML or key=value settings file; its values override flags")

    summarize = subparsers.add_parser("summarize", help="Summarize a directory of traces")
    summarize.add_argument("directory", help="Directory containing trace_*.csv files")
    summarize.add_argument("--metric", choices=METRICS, default="auto", help="Performance metric")
    summarize.add_argument("--out", help="Directory for summary_<method>.csv (default: the trace directory)")

    oracle = subparsers.add_parser("bench-oracle", help="Recompute benchmark minima")
    oracle.add_argument("--objective", action="append", choices=["branin", "hartmann3"],
                        help="Benchmark to check; repeatable (default: all)")
    oracle.add_argument("--grid-points", type=int, default=10**6, help="Grid size per benchmark")

    experts = subparsers.add_parser("experts", help="Expert selection frequencies from the results store")
    experts.add_argument("--db", required=True, help="SQLAlchemy URL of the results store")
    experts.add_argument("--method", choices=[m.value for m in Method], help="Restrict to one method")

    return parser


def _run(args: argparse.Namespace) -> int:
    try:
        flags = {
            "objective": args.objective,
            "method": args.method,
            "horizon": args.horizon,
            "n_init": args.n_init,
            "seeds": args.seeds,
            "n_random_experts": args.n_random_experts,
            "noise_sd": args.noise_sd,
            "out": args.out,
            "db": args.db,
            "record_wall_time": args.record_wall_time,
        }
        # Settings file lines override flags
        config = Config.from_mapping({}).apply(flags)
        if args.config:
            config = config.overlay(Config(args.config))
        cfg = config.experiment_config()
        objective = get_objective(cfg.objective)
    except (ValueError, FileNotFoundError) as e:
        raise UsageError(f"{build_parser().format_usage()}esp-opt run: error: {e}") from e

    traces = run_experiment(
        cfg, out_dir=config.out_dir, database_url=config.database_url, objective=objective
    )
    incomplete = [t.seed for t in traces if not t.complete]
    if incomplete:
        logger.error(f"Runs for seeds {incomplete} stopped early; traces written as incomplete")
        return EXIT_RUNTIME

    finals = [t.records[-1].absolute_error for t in traces]
    if all(e is not None for e in finals):
        logger.info(f"Final absolute error over {len(traces)} seeds: mean {np.mean(finals):.6g}, median {np.median(finals):.6g}")
    return EXIT_OK


def _summarize(args: argparse.Namespace) -> int:
    try:
        summaries = summarize_directory(args.directory, args.metric)
    except (ValueError, FileNotFoundError) as e:
        raise UsageError(f"esp-opt summarize: error: {e}") from e

    out_dir = Path(args.out or args.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    for method, table in summaries.items():
        path = out_dir / f"summary_{method}.csv"
        table.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
        logger.info(f"Wrote {len(table)}-row summary to {path}")
        print(f"# {method}")
        print(table.to_string(index=False))
    return EXIT_OK


def _bench_oracle(args: argparse.Namespace) -> int:
    names = args.objective or ["branin", "hartmann3"]
    table = run_bench_oracle(names, grid_points=args.grid_points)
    print(table.to_string(index=False))
    if (table["gap"] > ORACLE_TOLERANCE).any():
        logger.error(f"Oracle minima differ from the stored constants by more than {ORACLE_TOLERANCE}")
        return EXIT_RUNTIME
    return EXIT_OK


def _experts(args: argparse.Namespace) -> int:
    with DatabaseConnection(args.db) as db:
        with db.session_scope() as session:
            table = expert_selection_frequencies(session, args.method)
    if table.empty:
        print("No stored selections")
    else:
        print(table.to_string(index=False))
    return EXIT_OK


COMMANDS = {
    "run": _run,
    "summarize": _summarize,
    "bench-oracle": _bench_oracle,
    "experts": _experts,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point for the esp-opt command.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        Exit code: 0 for success, 1 for configuration errors, 2 for runtime failures
    """
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_CONFIG

    setup_logging(logging.DEBUG if args.verbose else logging.INFO, args.log_file)

    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_CONFIG
    except Exception:
        logger.exception(f"'{args.command}' failed")
        return EXIT_RUNTIME

