"""Gradient-free box-constrained minimizer shared by every strategy.

A scrambled Halton sweep locates promising regions; the best few sweep points
are then polished by coordinate search with a shrinking step.
"""

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.stats import qmc

from esp_optimizer.space import Box

# Batch objective: (n, d) points -> (n,) values
BatchFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OptimizerSettings:
    """Inner optimizer settings.

    Attributes:
        sweep_per_dim: Quasi-random sweep points per input dimension
        n_starts: Number of best sweep points refined locally
        n_iter: Coordinate-search iterations per start
        tol: Stop once every coordinate step is below this size
        initial_step: First coordinate step as a fraction of the box width
    """

    sweep_per_dim: int = 1000
    n_starts: int = 5
    n_iter: int = 50
    tol: float = 1e-6
    initial_step: float = 0.1

    def __post_init__(self) -> None:
        if self.sweep_per_dim < 1 or self.n_starts < 1 or self.n_iter < 0:
            raise ValueError(f"Invalid optimizer settings: {self}")
        if self.tol <= 0 or not 0 < self.initial_step <= 1:
            raise ValueError(f"Invalid optimizer tolerances: {self}")


def _evaluate(func: BatchFunction, points: np.ndarray) -> np.ndarray:
    values = np.asarray(func(points), dtype=float).reshape(-1)
    if values.shape[0] != points.shape[0]:
        raise ValueError(f"Objective returned {values.shape[0]} values for {points.shape[0]} points")
    return np.where(np.isfinite(values), values, np.inf)


def _coordinate_refine(
    func: BatchFunction,
    x0: np.ndarray,
    f0: float,
    bounds: Box,
    settings: OptimizerSettings,
) -> Tuple[np.ndarray, float]:
    x, fx = x0.copy(), f0
    step = settings.initial_step * bounds.width
    for _ in range(settings.n_iter):
        if np.all(step < settings.tol):
            break
        moves = np.diag(step)
        trial = bounds.clip(np.vstack([x + moves, x - moves]))
        values = _evaluate(func, trial)
        best = int(np.argmin(values))
        if values[best] < fx:
            x, fx = trial[best], float(values[best])
        else:
            step = 0.5 * step
    return x, fx


def minimize_box(
    func: BatchFunction,
    bounds: Box,
    rng: np.random.Generator,
    settings: OptimizerSettings | None = None,
) -> Tuple[np.ndarray, float]:
    """
    Minimize a vectorized function over a box.

    Args:
        func: Maps an (n, d) array of points to n values
        bounds: Search box
        rng: Seeded random source for the scrambled sweep
        settings: Optimizer settings (defaults when None)

    Returns:
        Tuple of (best point, best value); the point always lies in the box
    """
    settings = settings or OptimizerSettings()
    n_sweep = max(settings.sweep_per_dim * bounds.dim, settings.n_starts)

    sampler = qmc.Halton(d=bounds.dim, scramble=True, seed=rng)
    points = qmc.scale(sampler.random(n_sweep), bounds.lower, bounds.upper)
    points = bounds.clip(points)
    values = _evaluate(func, points)

    starts = np.argsort(values, kind="stable")[: settings.n_starts]
    best_x, best_f = points[starts[0]].copy(), float(values[starts[0]])
    for idx in starts:
        x, fx = _coordinate_refine(func, points[idx], float(values[idx]), bounds, settings)
        if fx < best_f:
            best_x, best_f = x, fx
    return bounds.clip(best_x), best_f
