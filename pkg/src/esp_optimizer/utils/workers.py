"""Process-wide cap on worker threads."""

import os

THREADS_ENV = "ESP_OPT_THREADS"


def worker_limit() -> int:
    """Worker threads allowed by ESP_OPT_THREADS (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        limit = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got '{raw}'")
    if limit < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got '{raw}'")
    return limit


def capped(requested: int, limit: int | None = None) -> int:
    """Requested thread count clamped to [1, limit]; limit defaults to worker_limit()."""
    limit = worker_limit() if limit is None else limit
    return max(1, min(int(requested), limit))
