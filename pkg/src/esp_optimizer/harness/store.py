"""Persist runs to the results store and query expert selection frequencies."""

from typing import Optional

import pandas as pd
from sqlalchemy import func, select
from sqlalchemy.orm import Session

from esp_optimizer.database.models import ExperimentRun, TraceEntry
from esp_optimizer.harness.experiment import ExperimentConfig
from esp_optimizer.harness.traces import Trace
from esp_optimizer.utils.logger import get_logger

logger = get_logger(__name__)


def _format_point(x) -> str:
    return " ".join(repr(float(v)) for v in x)


def save_trace(session: Session, trace: Trace, cfg: ExperimentConfig, noise_sd: float) -> ExperimentRun:
    """
    Store one run and its trace rows, replacing an earlier run with the same identity.

    Args:
        session: Active database session (caller manages transaction)
        trace: Finished trace
        cfg: Configuration the run used
        noise_sd: Observation noise actually applied

    Returns:
        The stored ExperimentRun
    """
    existing = session.scalars(
        select(ExperimentRun).where(
            ExperimentRun.method == cfg.method.value,
            ExperimentRun.objective == trace.objective,
            ExperimentRun.seed == trace.seed,
            ExperimentRun.n_random_experts == cfg.n_random_experts,
        )
    ).first()
    if existing is not None:
        logger.info(f"Replacing stored run {existing}")
        session.delete(existing)
        session.flush()

    final = trace.records[-1] if trace.records else None
    run = ExperimentRun(
        method=cfg.method.value,
        objective=trace.objective,
        seed=trace.seed,
        horizon=cfg.horizon,
        n_random_experts=cfg.n_random_experts,
        noise_sd=noise_sd,
        complete=trace.complete,
        true_min=trace.true_min,
        recommendation=None if trace.recommendation is None else _format_point(trace.recommendation),
        recommendation_value=trace.recommendation_value,
        final_error=final.absolute_error if final else None,
    )
    run.entries = [
        TraceEntry(
            t=r.t,
            x=_format_point(r.x),
            y=r.y,
            f=r.f,
            expert=r.expert,
            expert_name=r.expert_name,
            best_true_value=r.best_true_value,
            best_observed=r.best_observed,
            absolute_error=r.absolute_error,
            wall_time=r.wall_time,
        )
        for r in trace.records
    ]
    session.add(run)
    session.flush()

    logger.info(f"Stored {len(run.entries)} trace rows for {run}")
    return run


def expert_selection_frequencies(session: Session, method: Optional[str] = None) -> pd.DataFrame:
    """
    How often each expert was selected, per method and portfolio size.

    Initial design rows are excluded.

    Args:
        session: Active database session
        method: Restrict to one method

    Returns:
        DataFrame with columns method, n_random_experts, expert_name, count, frequency
    """
    query = (
        select(
            ExperimentRun.method,
            ExperimentRun.n_random_experts,
            TraceEntry.expert_name,
            func.count(TraceEntry.id),
        )
        .join(TraceEntry, TraceEntry.run_id == ExperimentRun.id)
        .where(TraceEntry.expert >= 0)
        .group_by(ExperimentRun.method, ExperimentRun.n_random_experts, TraceEntry.expert_name)
        .order_by(ExperimentRun.method, ExperimentRun.n_random_experts, TraceEntry.expert_name)
    )
    if method is not None:
        query = query.where(ExperimentRun.method == method)

    frame = pd.DataFrame(
        session.execute(query).all(),
        columns=["method", "n_random_experts", "expert_name", "count"],
    )
    if frame.empty:
        frame["frequency"] = pd.Series(dtype=float)
        return frame
    totals = frame.groupby(["method", "n_random_experts"])["count"].transform("sum")
    frame["frequency"] = frame["count"] / totals
    return frame
