"""Robustness to uninformative experts on Hartmann 3.

Adds 9 uniform-random experts to the ESP, Hedge and random portfolios
(T=50, 10 seeds) and compares the mean final error with and without them.
ESP should degrade less than the random portfolio. Runs are stored in a
SQLite results store so the expert selection frequencies can be inspected
afterwards with `esp-opt experts --db sqlite:///results/robustness.db`.
"""

import sys
from pathlib import Path

import numpy as np

from esp_optimizer.database.connection import DatabaseConnection
from esp_optimizer.harness.experiment import ExperimentConfig
from esp_optimizer.harness.runner import run_experiment
from esp_optimizer.harness.store import expert_selection_frequencies
from esp_optimizer.utils.logger import get_logger, setup_logging

setup_logging(level='INFO')
logger = get_logger(__name__)

HORIZON = 50
SEEDS = tuple(range(10))
METHODS = ("esp", "hedge", "random-portfolio")
N_RANDOM = 9
OUT_DIR = Path("results") / "robustness"
DATABASE_URL = "sqlite:///results/robustness.db"


def mean_final_error(method: str, n_random_experts: int) -> float:
    cfg = ExperimentConfig(
        "hartmann3", method=method, horizon=HORIZON, seeds=SEEDS, n_random_experts=n_random_experts
    )
    traces = run_experiment(cfg, out_dir=OUT_DIR, database_url=DATABASE_URL)
    return float(np.mean([t.records[-1].absolute_error for t in traces]))


def main() -> int:
    """Run every portfolio with and without random experts."""
    Path("results").mkdir(exist_ok=True)
    degradation = {}
    for method in METHODS:
        base = mean_final_error(method, 0)
        padded = mean_final_error(method, N_RANDOM)
        degradation[method] = padded - base
        logger.info(f"{method}: mean final error {base:.4g} -> {padded:.4g} with {N_RANDOM} random experts")

    with DatabaseConnection(DATABASE_URL) as db:
        with db.session_scope() as session:
            table = expert_selection_frequencies(session)
    logger.info(f"Expert selection frequencies:\n{table[table['n_random_experts'] == N_RANDOM].to_string(index=False)}")

    if degradation["esp"] >= degradation["random-portfolio"]:
        logger.error(
            f"ESP degraded by {degradation['esp']:.4g}, the random portfolio by "
            f"{degradation['random-portfolio']:.4g}"
        )
        return 1
    logger.info("Robustness trend holds: ESP degrades less than the random portfolio")
    return 0


if __name__ == "__main__":
    sys.exit(main())
