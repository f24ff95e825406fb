"""Branin trend check: ESP against the three base strategies.

Runs ESP, EI, PI and Thompson for 10 seeds with T=60 and default settings,
then checks that ESP's median final absolute error is at most 0.1 and that
its mean final error is no worse than the worst base strategy's.

Set ESP_OPT_THREADS to run seeds in parallel.
"""

import sys
from pathlib import Path

import numpy as np

from esp_optimizer.harness.experiment import ExperimentConfig
from esp_optimizer.harness.runner import run_experiment
from esp_optimizer.harness.summary import summarize
from esp_optimizer.utils.logger import get_logger, setup_logging

setup_logging(level='INFO')
logger = get_logger(__name__)

HORIZON = 60
SEEDS = tuple(range(10))
METHODS = ("esp", "ei", "pi", "thompson")
MEDIAN_ERROR_LIMIT = 0.1
OUT_DIR = Path("results") / "branin_trend"


def main() -> int:
    """Run the comparison and report pass or fail."""
    final_errors = {}
    for method in METHODS:
        cfg = ExperimentConfig("branin", method=method, horizon=HORIZON, seeds=SEEDS)
        traces = run_experiment(cfg, out_dir=OUT_DIR)
        table = summarize(traces)
        final_errors[method] = np.array([t.records[-1].absolute_error for t in traces])
        logger.info(
            f"{method}: final error mean {table['mean'].iloc[-1]:.4g} "
            f"(se {table['se'].iloc[-1]:.2g}), median {table['median'].iloc[-1]:.4g}"
        )

    esp_median = float(np.median(final_errors["esp"]))
    esp_mean = float(np.mean(final_errors["esp"]))
    worst_base = max(float(np.mean(final_errors[m])) for m in METHODS if m != "esp")

    passed = True
    if esp_median > MEDIAN_ERROR_LIMIT:
        logger.error(f"ESP median final error {esp_median:.4g} exceeds {MEDIAN_ERROR_LIMIT}")
        passed = False
    if esp_mean > worst_base:
        logger.error(f"ESP mean final error {esp_mean:.4g} is worse than every base strategy ({worst_base:.4g})")
        passed = False

    if passed:
        logger.info(f"Trend check passed: ESP median {esp_median:.4g}, mean {esp_mean:.4g}, worst base {worst_base:.4g}")
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
