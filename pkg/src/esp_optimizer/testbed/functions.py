"""Benchmark objectives and the observation-noise wrapper."""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from esp_optimizer.space import Box

BRANIN_BOUNDS = Box(np.array([-5.0, 0.0]), np.array([10.0, 15.0]))
BRANIN_MINIMUM = 5.0 / (4.0 * math.pi)  # 0.397887357729738
BRANIN_MINIMIZERS = np.array([[-math.pi, 12.275], [math.pi, 2.275], [9.42478, 2.475]])

HARTMANN3_BOUNDS = Box(np.zeros(3), np.ones(3))
HARTMANN3_MINIMUM = -3.86278214782076
HARTMANN3_MINIMIZER = np.array([0.114614, 0.555649, 0.852547])

_BRANIN_A = 1.0
_BRANIN_B = 5.1 / (4.0 * math.pi**2)
_BRANIN_C = 5.0 / math.pi
_BRANIN_R = 6.0
_BRANIN_S = 10.0
_BRANIN_T = 1.0 / (8.0 * math.pi)

_HARTMANN3_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_HARTMANN3_A = np.array(
    [
        [3.0, 10.0, 30.0],
        [0.1, 10.0, 35.0],
        [3.0, 10.0, 30.0],
        [0.1, 10.0, 35.0],
    ]
)
_HARTMANN3_P = 1e-4 * np.array(
    [
        [3689.0, 1170.0, 2673.0],
        [4699.0, 4387.0, 7470.0],
        [1091.0, 8732.0, 5547.0],
        [381.0, 5743.0, 8828.0],
    ]
)


@dataclass(frozen=True, eq=False)
class Objective:
    """A deterministic black-box function on a box.

    Attributes:
        name: Identifier used in traces and logs
        func: Maps one input vector to a real value
        bounds: Search box
        true_min: Global minimum value, None when unknown
        batch: Optional vectorized form mapping (n, d) points to n values
    """

    name: str
    func: Callable[[np.ndarray], float]
    bounds: Box
    true_min: Optional[float] = None
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.bounds.dim

    def __call__(self, x: np.ndarray) -> float:
        return float(self.func(np.asarray(x, dtype=float)))

    def evaluate_batch(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.batch is not None:
            return np.asarray(self.batch(x), dtype=float)
        return np.array([self.func(row) for row in x])


def _check_inside(x: np.ndarray, bounds: Box, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != bounds.dim:
        raise ValueError(f"{name} takes {bounds.dim}-dimensional inputs, got shape {x.shape}")
    if not bounds.contains(x):
        raise ValueError(f"{name} input outside its domain {bounds.as_pairs()}: {x}")
    return x


def branin_batch(x: np.ndarray) -> np.ndarray:
    x = _check_inside(np.atleast_2d(x), BRANIN_BOUNDS, "branin")
    x1, x2 = x[:, 0], x[:, 1]
    quadratic = x2 - _BRANIN_B * x1**2 + _BRANIN_C * x1 - _BRANIN_R
    return _BRANIN_A * quadratic**2 + _BRANIN_S * (1.0 - _BRANIN_T) * np.cos(x1) + _BRANIN_S


def branin(x: np.ndarray) -> float:
    """Branin-Hoo on [-5, 10] x [0, 15]; three global minima of value 5 / (4 pi)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"branin expects a single point, got shape {x.shape}")
    return float(branin_batch(x[None, :])[0])


def hartmann3_batch(x: np.ndarray) -> np.ndarray:
    x = _check_inside(np.atleast_2d(x), HARTMANN3_BOUNDS, "hartmann3")
    exponents = np.sum(_HARTMANN3_A * (x[:, None, :] - _HARTMANN3_P) ** 2, axis=-1)
    return -np.exp(-exponents) @ _HARTMANN3_ALPHA


def hartmann3(x: np.ndarray) -> float:
    """Four-mode Hartmann function on [0, 1]^3."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"hartmann3 expects a single point, got shape {x.shape}")
    return float(hartmann3_batch(x[None, :])[0])


BENCHMARKS = {
    "branin": Objective("branin", branin, BRANIN_BOUNDS, BRANIN_MINIMUM, branin_batch),
    "hartmann3": Objective("hartmann3", hartmann3, HARTMANN3_BOUNDS, HARTMANN3_MINIMUM, hartmann3_batch),
}


class NoisyBlackBox:
    """
    Objective observed through additive Gaussian noise.

    Queries consume the seeded stream in order, so a fixed seed fixes the
    whole noise sequence.
    """

    def __init__(self, objective: Objective, noise_sd: float, rng: np.random.Generator):
        if not noise_sd >= 0:
            raise ValueError(f"noise_sd must be non-negative, got {noise_sd}")
        self.objective = objective
        self.noise_sd = float(noise_sd)
        self.rng = rng
        self.n_queries = 0

    @property
    def bounds(self) -> Box:
        return self.objective.bounds

    def query(self, x: np.ndarray) -> Tuple[float, float]:
        """Return (noisy observation y, true value f)."""
        f = self.objective(x)
        eps = self.rng.standard_normal()
        self.n_queries += 1
        return f + self.noise_sd * eps, f


def noisy(objective: Objective, noise_sd: float, rng: np.random.Generator) -> NoisyBlackBox:
    return NoisyBlackBox(objective, noise_sd, rng)


def get_objective(spec: str) -> Objective:
    """
    Resolve an objective identifier.

    Args:
        spec: "branin", "hartmann3" or "csv:<path>" for a point-cloud file

    Returns:
        The objective

    Raises:
        ValueError: If the identifier is unknown
        FileNotFoundError: If a point-cloud file does not exist
    """
    key = spec.strip()
    if key.lower() in BENCHMARKS:
        return BENCHMARKS[key.lower()]
    if key.startswith("csv:"):
        # datasets imports Objective from this module
        from esp_optimizer.testbed.datasets import load_point_cloud, nearest_neighbor_objective

        path = key[len("csv:") :]
        return nearest_neighbor_objective(load_point_cloud(path), name=key)
    raise ValueError(f"Unknown objective '{spec}'. Expected one of {sorted(BENCHMARKS)} or csv:<path>")
