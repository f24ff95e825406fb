"""Point-cloud datasets queried by nearest-neighbour interpolation."""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from esp_optimizer.space import Box
from esp_optimizer.testbed.functions import Objective
from esp_optimizer.utils.logger import get_logger

logger = get_logger(__name__)

# Query rows scanned per block; bounds the distance matrix held in memory
SCAN_BLOCK = 256


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Finite set of scored locations.

    Attributes:
        coords: Locations, shape (n, d)
        values: Score at each location, shape (n,)
        source: File the cloud was read from, if any
    """

    coords: np.ndarray
    values: np.ndarray
    source: Optional[str] = None

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=float)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] < 1:
            raise ValueError(f"Point cloud needs at least one (n, d) coordinate row, got {coords.shape}")
        if values.shape[0] != coords.shape[0]:
            raise ValueError(f"Point cloud has {coords.shape[0]} rows but {values.shape[0]} values")
        if not np.all(np.isfinite(coords)) or not np.all(np.isfinite(values)):
            raise ValueError("Point cloud coordinates and values must be finite")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.coords.shape[0])

    @property
    def dim(self) -> int:
        return int(self.coords.shape[1])

    @property
    def bounds(self) -> Box:
        """Coordinate-wise min/max box; flat dimensions are padded by 0.5 on each side."""
        lower = self.coords.min(axis=0)
        upper = self.coords.max(axis=0)
        flat = upper <= lower
        return Box(np.where(flat, lower - 0.5, lower), np.where(flat, upper + 0.5, upper))

    def nearest_index(self, x: np.ndarray) -> np.ndarray:
        """Row index of the Euclidean-nearest point for every query row; ties go to the lowest index."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            raise ValueError(f"Point cloud has dimension {self.dim}, got queries of shape {x.shape}")
        indices = np.empty(x.shape[0], dtype=int)
        for start in range(0, x.shape[0], SCAN_BLOCK):
            block = x[start : start + SCAN_BLOCK]
            distances = np.sum((block[:, None, :] - self.coords[None, :, :]) ** 2, axis=-1)
            indices[start : start + SCAN_BLOCK] = np.argmin(distances, axis=1)
        return indices


def _has_header(path: Path) -> bool:
    with open(path, "r", encoding="utf-8") as f:
        first_line = f.readline()
    first_token = first_line.split(",")[0].strip()
    try:
        float(first_token)
    except ValueError:
        return True
    return False


def load_point_cloud(path: Union[str, Path]) -> PointCloud:
    """
    Read a comma-separated point cloud: d coordinate columns then one value column.

    An optional single header line is detected by a non-numeric first token.

    Args:
        path: CSV file

    Returns:
        PointCloud

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the file has fewer than two columns or non-numeric cells
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Point cloud file not found: {path}")

    header = 0 if _has_header(path) else None
    frame = pd.read_csv(path, header=header, encoding="utf-8", skip_blank_lines=True)
    if frame.shape[1] < 2:
        raise ValueError(f"Point cloud {path} needs coordinate columns and a value column")
    try:
        data = frame.to_numpy(dtype=float)
    except ValueError as e:
        raise ValueError(f"Point cloud {path} contains non-numeric cells: {e}") from e

    cloud = PointCloud(data[:, :-1], data[:, -1], source=str(path))
    logger.info(f"Loaded point cloud {path}: {len(cloud)} rows, {cloud.dim} dimensions")
    return cloud


def nearest_neighbor_objective(pc: PointCloud, name: Optional[str] = None) -> Objective:
    """Piecewise-constant objective returning the value of the nearest cloud point."""

    def evaluate_batch(x: np.ndarray) -> np.ndarray:
        return pc.values[pc.nearest_index(x)]

    def evaluate(x: np.ndarray) -> float:
        return float(evaluate_batch(np.asarray(x, dtype=float)[None, :])[0])

    label = name or (f"csv:{pc.source}" if pc.source else "point-cloud")
    return Objective(label, evaluate, pc.bounds, float(np.min(pc.values)), evaluate_batch)
