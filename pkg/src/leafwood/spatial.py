"""Exact fixed-radius neighbor queries over a static cloud.

All distance tests use the closed ball (<= radius); queries are exact,
never approximate, so downstream features are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ._util import worker_count
from .cloud import LabeledCloud


@dataclass(frozen=True)
class Neighborhood:
    """Indices of all points within radius_m of the center, center included."""

    center_index: int
    member_indices: np.ndarray
    radius_m: float


class SpatialIndex:
    """Immutable k-d tree over a cloud; results reference original indices.

    Safe for concurrent read-only queries once built.
    """

    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 3 or len(points) == 0:
            raise ValueError("index requires a non-empty (n, 3) point array")
        self._points = points
        self._tree = cKDTree(points)

    @property
    def points(self) -> np.ndarray:
        return self._points

    def __len__(self) -> int:
        return len(self._points)

    def query_radius(self, center: np.ndarray, radius_m: float) -> np.ndarray:
        """Sorted indices of points with distance <= radius_m from center."""
        if radius_m <= 0:
            raise ValueError(f"radius must be positive, got {radius_m}")
        idx = self._tree.query_ball_point(np.asarray(center, dtype=np.float64), radius_m)
        return np.sort(np.asarray(idx, dtype=np.int64))

    def query_radius_all(self, radius_m: float) -> list:
        """Neighbor index lists for every indexed point (closed ball)."""
        if radius_m <= 0:
            raise ValueError(f"radius must be positive, got {radius_m}")
        return self._tree.query_ball_point(
            self._points, radius_m, workers=worker_count()
        )


def build_index(cloud: LabeledCloud) -> SpatialIndex:
    """Build an exact radius-query index over a non-empty cloud."""
    if len(cloud) == 0:
        raise ValueError("cannot index an empty cloud")
    return SpatialIndex(cloud.points)


def radius_query(index: SpatialIndex, center_index: int, radius_m: float) -> Neighborhood:
    """All points within radius_m of the point at center_index (inclusive)."""
    if not 0 <= center_index < len(index):
        raise IndexError(
            f"center index {center_index} out of range for {len(index)} points"
        )
    members = index.query_radius(index.points[center_index], radius_m)
    return Neighborhood(center_index=center_index, member_indices=members, radius_m=radius_m)
