"""Inverse score transform and quantization into a discrete bounded 3D space.

Scores above the floor ``tau`` are mapped through ``x -> 1/(x - tau)``, which
spreads low scores over a wide range and compresses high scores near zero;
scores at or below ``tau`` map to +infinity and are dropped.  The finite
values are quantized into ``bins`` equal-width levels spanning the observed
range (top edge inclusive), giving one 3D point per contributing pixel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .io import ScoreMap

# Scores this close to tau are treated as below the floor, so the transformed
# values stay bounded.
TAU_EPSILON = 1e-12


@dataclass(frozen=True)
class TransformParams:
    tau: float = 0.2
    bins: int = 16

    def __post_init__(self):
        if not (0.0 <= self.tau < 1.0):
            raise ValueError(f"tau must be in [0, 1), got {self.tau}")
        if self.bins < 1:
            raise ValueError(f"bins must be >= 1, got {self.bins}")


@dataclass(frozen=True)
class PointCloud3D:
    """Occupancy grid over (x, y, z) with its naive-model Bernoulli parameter.

    The grid covers the 2D bounding box of the contributing pixels (origin
    ``(x_origin, y_origin)`` in image coordinates) times all ``bins`` z
    levels; each pixel column holds at most one point.  ``p`` is the point
    count divided by the grid volume.
    """

    occupancy: np.ndarray  # uint8, shape (width, height, bins)
    num_points: int
    p: float
    z_edges: np.ndarray  # float64, bins + 1 monotone bin boundaries
    x_origin: int = 0
    y_origin: int = 0

    def __post_init__(self):
        occ = np.ascontiguousarray(self.occupancy, dtype=np.uint8)
        if occ.ndim != 3:
            raise ValueError("occupancy must be 3D (width, height, bins)")
        if int(occ.sum()) != self.num_points:
            raise ValueError("num_points does not match occupancy")
        if occ.size and occ.sum(axis=2).max() > 1:
            raise ValueError("a pixel column may hold at most one point")
        occ.setflags(write=False)
        edges = np.asarray(self.z_edges, dtype=np.float64)
        edges.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "z_edges", edges)

    @property
    def width(self) -> int:
        return self.occupancy.shape[0]

    @property
    def height(self) -> int:
        return self.occupancy.shape[1]

    @property
    def bins(self) -> int:
        return self.occupancy.shape[2]

    @property
    def is_empty(self) -> bool:
        return self.num_points == 0


def transform_score(x: float, tau: float) -> float:
    """Map a score through the inverse transform; +inf at or below tau."""
    if x - tau <= TAU_EPSILON:
        return math.inf
    return 1.0 / (x - tau)


def build_point_cloud(smap: ScoreMap, params: TransformParams) -> PointCloud3D:
    """Quantize the finite transformed scores of ``smap`` into a 3D cloud."""
    bins = params.bins
    scores = smap.scores
    finite = (scores - params.tau) > TAU_EPSILON
    ys, xs = np.nonzero(finite)
    if xs.size == 0:
        empty = np.zeros((0, 0, bins), dtype=np.uint8)
        return PointCloud3D(empty, 0, 0.0, np.zeros(bins + 1), 0, 0)

    values = 1.0 / (scores[finite] - params.tau)
    vmin = float(values.min())
    vmax = float(values.max())
    z_edges = np.linspace(vmin, vmax, bins + 1)
    if vmax > vmin:
        z = np.floor((values - vmin) / (vmax - vmin) * bins).astype(np.int64)
        np.clip(z, 0, bins - 1, out=z)  # top edge inclusive
    else:
        z = np.zeros(values.shape, dtype=np.int64)

    x_origin, y_origin = int(xs.min()), int(ys.min())
    width = int(xs.max()) - x_origin + 1
    height = int(ys.max()) - y_origin + 1
    occ = np.zeros((width, height, bins), dtype=np.uint8)
    occ[xs - x_origin, ys - y_origin, z] = 1

    num_points = int(xs.size)
    p = num_points / (width * height * bins)
    return PointCloud3D(occ, num_points, p, z_edges, x_origin, y_origin)
