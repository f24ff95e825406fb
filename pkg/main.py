"""
esp-optimizer - Main Entry Point.

Runs Bayesian-optimization experiments with the Entropy Search Portfolio and
its baselines, and aggregates their traces.

Usage:
    # ESP on Branin, five seeds
    uv run python main.py run --objective branin --horizon 30 --seeds 0..4

    # Summarize the traces written above
    uv run python main.py summarize results/

    # Enable debug logging
    uv run python main.py --verbose run --objective hartmann3 --seeds 0

See `python main.py --help` for every subcommand.
"""

import sys

from esp_optimizer.cli import main

if __name__ == "__main__":
    sys.exit(main())
