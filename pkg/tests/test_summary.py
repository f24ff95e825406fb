"""Tests for trace summaries and the benchmark oracle."""

from pathlib import Path

import numpy as np
import pytest

from esp_optimizer.harness.oracle import grid_minimum, run_bench_oracle
from esp_optimizer.harness.summary import metric_series, summarize, summarize_directory
from esp_optimizer.harness.traces import Trace, write_trace
from esp_optimizer.testbed.functions import BENCHMARKS, BRANIN_MINIMUM


def _trace(seed: int, values: list, method: str = "esp", true_min: float = 0.0) -> Trace:
    trace = Trace(method, "branin", seed, 1, true_min=true_min)
    for value in values:
        trace.append(np.array([0.0]), value + 0.5, value, 0, "ei")
    return trace


class TestMetricSeries:
    """Test metric extraction."""

    def test_auto_uses_error_when_minimum_known(self) -> None:
        """Test auto picks the absolute error."""
        trace = _trace(0, [3.0, 2.0], true_min=1.0)
        assert metric_series(trace).tolist() == [2.0, 1.0]

    def test_auto_falls_back_to_best_value(self) -> None:
        """Test auto picks the best true value without a minimum."""
        trace = Trace("esp", "csv:x.csv", 0, 1)
        trace.append(np.array([0.0]), 4.0, 4.0, 0, "ei")
        assert metric_series(trace).tolist() == [4.0]

    def test_observed(self) -> None:
        """Test the observed metric tracks the noisy best."""
        assert metric_series(_trace(0, [3.0, 1.0]), "observed").tolist() == [3.5, 1.5]

    def test_unknown_metric(self) -> None:
        """Test unknown metric names are rejected."""
        with pytest.raises(ValueError):
            metric_series(_trace(0, [1.0]), "median")


class TestSummarize:
    """Test per-iteration statistics."""

    def test_single_trace(self) -> None:
        """Test one trace gives its own values and zero standard error."""
        table = summarize([_trace(0, [3.0, 2.0, 2.5])])
        assert table["mean"].tolist() == [3.0, 2.0, 2.0]
        assert table["se"].tolist() == [0.0, 0.0, 0.0]
        assert table["n"].tolist() == [1, 1, 1]

    def test_two_traces(self) -> None:
        """Test metrics 1 and 3 give mean 2 and standard error 1."""
        table = summarize([_trace(0, [1.0]), _trace(1, [3.0])])
        assert table["mean"].iloc[0] == pytest.approx(2.0)
        assert table["se"].iloc[0] == pytest.approx(1.0)
        assert table["median"].iloc[0] == pytest.approx(2.0)
        assert (table["min"].iloc[0], table["max"].iloc[0]) == (1.0, 3.0)

    def test_identical_traces(self) -> None:
        """Test identical traces have zero standard error everywhere."""
        table = summarize([_trace(s, [2.0, 1.0]) for s in range(4)])
        assert np.all(table["se"] == 0.0)
        assert table["t"].tolist() == [1, 2]

    def test_mismatched_horizons(self) -> None:
        """Test traces of different length cannot be summarized together."""
        with pytest.raises(ValueError, match="mismatched horizons"):
            summarize([_trace(0, [1.0]), _trace(1, [1.0, 2.0])])

    def test_empty(self) -> None:
        """Test an empty list is rejected."""
        with pytest.raises(ValueError, match="Nothing to summarize"):
            summarize([])

    def test_directory_groups_by_method(self, tmp_path: Path) -> None:
        """Test each method label gets its own table."""
        for seed in range(3):
            write_trace(_trace(seed, [2.0, 1.0]), tmp_path)
            write_trace(_trace(seed, [4.0, 3.0, 2.0], method="hedge9"), tmp_path)
        summaries = summarize_directory(tmp_path)
        assert sorted(summaries) == ["esp", "hedge9"]
        assert len(summaries["hedge9"]) == 3
        assert summaries["esp"]["n"].iloc[0] == 3

    def test_directory_without_traces(self, tmp_path: Path) -> None:
        """Test an empty directory is an error."""
        with pytest.raises(ValueError, match="No complete traces"):
            summarize_directory(tmp_path)


class TestBenchOracle:
    """Test the grid-plus-refinement oracle."""

    def test_grid_points_are_sorted(self) -> None:
        """Test the best grid points come first and lie in the box."""
        objective = BENCHMARKS["branin"]
        points, values = grid_minimum(objective, grid_points=2500, n_best=3)
        assert points.shape == (3, 2)
        assert np.all(np.diff(values) >= 0)
        assert objective.bounds.contains(points)

    def test_recovers_stored_minima(self) -> None:
        """Test a coarse grid plus L-BFGS-B reaches both stored minima."""
        table = run_bench_oracle(grid_points=20000, n_starts=5)
        assert table["objective"].tolist() == ["branin", "hartmann3"]
        assert np.all(table["gap"] < 1e-4)
        assert table["oracle_min"].iloc[0] == pytest.approx(BRANIN_MINIMUM, abs=1e-6)

    def test_unknown_benchmark(self) -> None:
        """Test only benchmarks with a stored minimum are accepted."""
        with pytest.raises(ValueError, match="No oracle"):
            run_bench_oracle(["rosenbrock"])
