"""SQLAlchemy ORM models for the optional results store."""

from datetime import datetime
from typing import List, Optional

from sqlalchemy import (
    Boolean,
    DateTime,
    Float,
    ForeignKey,
    Index,
    Integer,
    String,
    Text,
    UniqueConstraint,
    func,
)
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship


class Base(DeclarativeBase):
    """Base class for all database models."""

    pass


class TimestampMixin:
    """Mixin for created_at and updated_at timestamps."""

    created_at: Mapped[datetime] = mapped_column(
        DateTime(timezone=True),
        server_default=func.now(),
        nullable=False
    )
    updated_at: Mapped[datetime] = mapped_column(
        DateTime(timezone=True),
        server_default=func.now(),
        onupdate=func.now(),
        nullable=False
    )


class ExperimentRun(Base, TimestampMixin):
    """One optimization run: a (method, objective, seed) triple."""

    __tablename__ = "experiment_runs"

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    method: Mapped[str] = mapped_column(String(32), nullable=False, index=True)
    objective: Mapped[str] = mapped_column(String(500), nullable=False)
    seed: Mapped[int] = mapped_column(Integer, nullable=False)
    horizon: Mapped[int] = mapped_column(Integer, nullable=False)
    n_random_experts: Mapped[int] = mapped_column(Integer, default=0, nullable=False)
    noise_sd: Mapped[float] = mapped_column(Float, nullable=False)
    complete: Mapped[bool] = mapped_column(Boolean, default=True, nullable=False)
    true_min: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    recommendation: Mapped[Optional[str]] = mapped_column(Text, nullable=True)
    recommendation_value: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    final_error: Mapped[Optional[float]] = mapped_column(Float, nullable=True)

    # Relationships
    entries: Mapped[List["TraceEntry"]] = relationship(
        "TraceEntry",
        back_populates="run",
        cascade="all, delete-orphan",
        order_by="TraceEntry.t"
    )

    __table_args__ = (
        UniqueConstraint("method", "objective", "seed", "n_random_experts", name="uq_run_identity"),
    )

    def __repr__(self) -> str:
        return (
            f"<ExperimentRun(method='{self.method}', objective='{self.objective}', "
            f"seed={self.seed}, horizon={self.horizon})>"
        )


class TraceEntry(Base):
    """One query of a run."""

    __tablename__ = "trace_entries"

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    run_id: Mapped[int] = mapped_column(
        Integer,
        ForeignKey("experiment_runs.id", ondelete="CASCADE"),
        nullable=False
    )
    t: Mapped[int] = mapped_column(Integer, nullable=False)
    x: Mapped[str] = mapped_column(Text, nullable=False)
    y: Mapped[float] = mapped_column(Float, nullable=False)
    f: Mapped[float] = mapped_column(Float, nullable=False)
    expert: Mapped[int] = mapped_column(Integer, nullable=False)
    expert_name: Mapped[str] = mapped_column(String(64), nullable=False)
    best_true_value: Mapped[float] = mapped_column(Float, nullable=False)
    best_observed: Mapped[float] = mapped_column(Float, nullable=False)
    absolute_error: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    wall_time: Mapped[float] = mapped_column(Float, nullable=False)

    # Relationships
    run: Mapped["ExperimentRun"] = relationship("ExperimentRun", back_populates="entries")

    __table_args__ = (
        UniqueConstraint("run_id", "t", name="uq_run_step"),
        Index("idx_trace_entries_expert", "expert_name"),
    )

    def __repr__(self) -> str:
        return f"<TraceEntry(run_id={self.run_id}, t={self.t}, expert='{self.expert_name}', y={self.y:.6g})>"
