"""Aggregate traces over seeds into plot-ready tables."""

from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from esp_optimizer.harness.traces import Trace, read_traces
from esp_optimizer.utils.logger import get_logger

logger = get_logger(__name__)

SUMMARY_COLUMNS = ["t", "n", "mean", "se", "median", "min", "max"]


def metric_series(trace: Trace, metric: str = "auto") -> np.ndarray:
    """
    Per-iteration performance metric of one trace.

    Args:
        trace: Trace to read
        metric: "auto" (absolute error when the true minimum is known, else the
            best true value), "true" (best true value) or "observed" (best noisy y)

    Returns:
        Array of length len(trace)
    """
    if metric == "observed":
        return np.array([r.best_observed for r in trace.records])
    if metric == "true":
        return np.array([r.best_true_value for r in trace.records])
    if metric != "auto":
        raise ValueError(f"Unknown metric '{metric}'")
    if trace.records and all(r.absolute_error is not None for r in trace.records):
        return np.array([r.absolute_error for r in trace.records])
    return np.array([r.best_true_value for r in trace.records])


def summarize(traces: Sequence[Trace], metric: str = "auto") -> pd.DataFrame:
    """
    Mean, standard error, median, min and max of the metric at every iteration.

    Args:
        traces: Traces sharing one horizon
        metric: Metric passed to metric_series

    Returns:
        DataFrame with columns t, n, mean, se, median, min, max

    Raises:
        ValueError: If there are no traces or the horizons differ
    """
    if not traces:
        raise ValueError("Nothing to summarize")
    horizons = {len(trace) for trace in traces}
    if len(horizons) != 1:
        raise ValueError(f"Traces have mismatched horizons: {sorted(horizons)}")

    values = np.vstack([metric_series(trace, metric) for trace in traces])
    n = values.shape[0]
    if n > 1:
        se = np.std(values, axis=0, ddof=1) / np.sqrt(n)
    else:
        se = np.zeros(values.shape[1])

    return pd.DataFrame(
        {
            "t": np.arange(1, values.shape[1] + 1),
            "n": n,
            "mean": values.mean(axis=0),
            "se": se,
            "median": np.median(values, axis=0),
            "min": values.min(axis=0),
            "max": values.max(axis=0),
        },
        columns=SUMMARY_COLUMNS,
    )


def summarize_directory(directory: Union[str, Path], metric: str = "auto") -> Dict[str, pd.DataFrame]:
    """Summarize every complete trace in a directory, grouped by method label."""
    grouped: Dict[str, List[Trace]] = {}
    for trace in read_traces(directory):
        grouped.setdefault(trace.method, []).append(trace)
    if not grouped:
        raise ValueError(f"No complete traces found in {directory}")

    summaries = {}
    for method, traces in sorted(grouped.items()):
        summaries[method] = summarize(traces, metric)
        logger.info(f"Summarized {len(traces)} {method} traces of length {len(traces[0])}")
    return summaries
