"""Axis-aligned search boxes."""

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class Box:
    """Bounding box X = [lower_1, upper_1] x ... x [lower_d, upper_d].

    Attributes:
        lower: Lower corner, shape (d,)
        upper: Upper corner, shape (d,)
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError(
                f"Box corners must be 1-D and of equal length, got {lower.shape} and {upper.shape}"
            )
        if not np.all(np.isfinite(lower)) or not np.all(np.isfinite(upper)):
            raise ValueError("Box corners must be finite")
        if np.any(lower >= upper):
            raise ValueError(f"Box lower corner must be below upper corner: {lower} vs {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "Box":
        """Build a box from (lo, hi) pairs, one per dimension."""
        arr = np.asarray(list(pairs), dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"Expected (lo, hi) pairs, got array of shape {arr.shape}")
        return cls(arr[:, 0], arr[:, 1])

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x: np.ndarray) -> bool:
        """Check that a point (or every row of a point array) lies in the box."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            return False
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def sample(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        """Draw uniform points; a single (d,) point when n is None, else (n, d)."""
        size = self.dim if n is None else (n, self.dim)
        return self.lower + rng.random(size) * self.width

    def as_pairs(self) -> Tuple[Tuple[float, float], ...]:
        return tuple((float(lo), float(hi)) for lo, hi in zip(self.lower, self.upper))
