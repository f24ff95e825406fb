"""Per-query trace records and their CSV form."""

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from esp_optimizer.utils.logger import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.17g"
INCOMPLETE_SUFFIX = ".incomplete.csv"
_FILE_PATTERN = re.compile(r"^trace_(?P<method>.+)_seed(?P<seed>\d+)\.csv$")


@dataclass(frozen=True, eq=False)
class TraceRecord:
    """One query of a run.

    Attributes:
        seed: Master seed of the run
        t: 1-based query index
        x: Query point
        y: Noisy observation
        f: True objective value at x
        expert: Index of the selected expert, -1 for initial design points
        expert_name: Name of the selected expert, "init" for initial design points
        best_true_value: Lowest f among queries so far
        best_observed: Lowest y among queries so far
        absolute_error: best_true_value - true minimum, None when the minimum is unknown
        wall_time: Seconds spent choosing and evaluating this query
    """

    seed: int
    t: int
    x: np.ndarray
    y: float
    f: float
    expert: int
    expert_name: str
    best_true_value: float
    best_observed: float
    absolute_error: Optional[float] = None
    wall_time: float = 0.0


@dataclass
class Trace:
    """All queries of one (method, objective, seed) run.

    Attributes:
        method: Method label (e.g. esp, hedge9)
        objective: Objective identifier
        seed: Master seed
        dim: Input dimension
        records: Per-query records in order
        true_min: Global minimum value when known
        complete: False when the run stopped early after a failure
        recommendation: Final recommended point
        recommendation_value: True objective value at the recommendation
    """

    method: str
    objective: str
    seed: int
    dim: int
    records: List[TraceRecord] = field(default_factory=list)
    true_min: Optional[float] = None
    complete: bool = True
    recommendation: Optional[np.ndarray] = None
    recommendation_value: Optional[float] = None

    def __len__(self) -> int:
        return len(self.records)

    @property
    def file_name(self) -> str:
        suffix = ".csv" if self.complete else INCOMPLETE_SUFFIX
        return f"trace_{self.method}_seed{self.seed}{suffix}"

    def append(
        self,
        x: np.ndarray,
        y: float,
        f: float,
        expert: int,
        expert_name: str,
        wall_time: float = 0.0,
    ) -> TraceRecord:
        """Record a query, updating the running best values."""
        previous = self.records[-1] if self.records else None
        best_true = min(f, previous.best_true_value) if previous else f
        best_observed = min(y, previous.best_observed) if previous else y
        error = None if self.true_min is None else max(best_true - self.true_min, 0.0)
        record = TraceRecord(
            seed=self.seed,
            t=len(self.records) + 1,
            x=np.asarray(x, dtype=float).copy(),
            y=float(y),
            f=float(f),
            expert=expert,
            expert_name=expert_name,
            best_true_value=float(best_true),
            best_observed=float(best_observed),
            absolute_error=error,
            wall_time=wall_time,
        )
        self.records.append(record)
        return record

    def to_frame(self, record_wall_time: bool = False) -> pd.DataFrame:
        rows = []
        for r in self.records:
            row = {"seed": r.seed, "t": r.t}
            row.update({f"x{j}": float(v) for j, v in enumerate(r.x)})
            row.update(
                {
                    "y": r.y,
                    "f": r.f,
                    "expert": r.expert,
                    "expert_name": r.expert_name,
                    "best_true_value": r.best_true_value,
                    "best_observed": r.best_observed,
                    "absolute_error": np.nan if r.absolute_error is None else r.absolute_error,
                }
            )
            if record_wall_time:
                row["wall_time"] = r.wall_time
            rows.append(row)
        columns = ["seed", "t", *(f"x{j}" for j in range(self.dim)), "y", "f", "expert", "expert_name",
                   "best_true_value", "best_observed", "absolute_error"]
        if record_wall_time:
            columns.append("wall_time")
        return pd.DataFrame(rows, columns=columns)


def write_trace(trace: Trace, out_dir: Union[str, Path], record_wall_time: bool = False) -> Path:
    """
    Write a trace as CSV with 17 significant digits.

    Args:
        trace: Trace to write
        out_dir: Output directory (created if missing)
        record_wall_time: Include the wall_time column

    Returns:
        Path of the written file
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / trace.file_name
    trace.to_frame(record_wall_time).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    if trace.complete:
        logger.info(f"Wrote {len(trace)} rows to {path}")
    else:
        logger.warning(f"Wrote incomplete trace ({len(trace)} rows) to {path}")
    return path


def _optional(value: float) -> Optional[float]:
    return None if value is None or (isinstance(value, float) and math.isnan(value)) else float(value)


def read_trace(path: Union[str, Path]) -> Trace:
    """
    Read a trace file written by write_trace.

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the file name or columns do not match the trace format
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trace file not found: {path}")
    match = _FILE_PATTERN.match(path.name)
    if match is None:
        raise ValueError(f"Not a trace file name: {path.name}")

    frame = pd.read_csv(path)
    x_columns = [c for c in frame.columns if re.fullmatch(r"x\d+", c)]
    required = {"seed", "t", "y", "f", "expert", "expert_name", "best_true_value", "best_observed", "absolute_error"}
    missing = required - set(frame.columns)
    if missing or not x_columns:
        raise ValueError(f"Trace {path} is missing columns: {sorted(missing) or 'x0..'}")

    errors = frame["absolute_error"].to_numpy(dtype=float)
    true_min = None
    if len(frame) and not np.isnan(errors[0]):
        true_min = float(frame["best_true_value"].iloc[0] - errors[0])

    trace = Trace(
        method=match.group("method"),
        objective="",
        seed=int(match.group("seed")),
        dim=len(x_columns),
        true_min=true_min,
    )
    points = frame[x_columns].to_numpy(dtype=float)
    for i, row in enumerate(frame.itertuples(index=False)):
        trace.records.append(
            TraceRecord(
                seed=int(row.seed),
                t=int(row.t),
                x=points[i],
                y=float(row.y),
                f=float(row.f),
                expert=int(row.expert),
                expert_name=str(row.expert_name),
                best_true_value=float(row.best_true_value),
                best_observed=float(row.best_observed),
                absolute_error=_optional(errors[i]),
                wall_time=float(getattr(row, "wall_time", 0.0)),
            )
        )
    return trace


def read_traces(directory: Union[str, Path]) -> List[Trace]:
    """Read every complete trace in a directory, sorted by file name; incomplete traces are skipped."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Trace directory not found: {directory}")

    traces = []
    for path in sorted(directory.glob("trace_*.csv")):
        if path.name.endswith(INCOMPLETE_SUFFIX):
            logger.warning(f"Skipping incomplete trace {path.name}")
            continue
        traces.append(read_trace(path))
    return traces
