"""3D integral histogram: O(1) point counts for axis-aligned boxes.

The cumulative volume stores, at (x, y, z), the number of cloud points with
all coordinates <= (x, y, z).  Any closed box count is then an 8-term
inclusion-exclusion of corner lookups.  Boxes follow the closed convention
[x0, x0+w-1] x [y0, y0+h-1] x [z0, z0+zlen-1].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .detector import Box3D
    from .transform import PointCloud3D


@dataclass(frozen=True)
class IntegralVolume:
    """Cumulative count volume; ``padded`` carries a zero layer at index 0."""

    padded: np.ndarray  # int32, shape (width+1, height+1, bins+1)

    def __post_init__(self):
        self.padded.setflags(write=False)

    @property
    def cum(self) -> np.ndarray:
        """The (width, height, bins) cumulative grid itself."""
        return self.padded[1:, 1:, 1:]

    @property
    def width(self) -> int:
        return self.padded.shape[0] - 1

    @property
    def height(self) -> int:
        return self.padded.shape[1] - 1

    @property
    def bins(self) -> int:
        return self.padded.shape[2] - 1

    @property
    def num_points(self) -> int:
        return int(self.padded[-1, -1, -1])


def build_integral(cloud: PointCloud3D) -> IntegralVolume:
    """Prefix-sum the occupancy grid along all three axes (exact integers)."""
    w, h, b = cloud.occupancy.shape
    padded = np.zeros((w + 1, h + 1, b + 1), dtype=np.int32)
    inner = padded[1:, 1:, 1:]
    np.cumsum(cloud.occupancy, axis=0, out=inner)
    np.cumsum(inner, axis=1, out=inner)
    np.cumsum(inner, axis=2, out=inner)
    return IntegralVolume(padded)


def count_in_box(iv: IntegralVolume, box: Box3D) -> int:
    """Exact number of points inside the closed box, in O(1)."""
    x0, y0, z0 = box.x0, box.y0, box.z0
    x1, y1, z1 = x0 + box.w, y0 + box.h, z0 + box.zlen
    if box.w < 1 or box.h < 1 or box.zlen < 1:
        raise ValueError(f"box sides must be >= 1, got {box.w}x{box.h}x{box.zlen}")
    if x0 < 0 or y0 < 0 or z0 < 0 or x1 > iv.width or y1 > iv.height or z1 > iv.bins:
        raise ValueError(
            f"box [{x0}:{x1}]x[{y0}:{y1}]x[{z0}:{z1}] outside "
            f"{iv.width}x{iv.height}x{iv.bins} volume"
        )
    c = iv.padded
    return int(
        c[x1, y1, z1] - c[x0, y1, z1] - c[x1, y0, z1] + c[x0, y0, z1]
        - c[x1, y1, z0] + c[x0, y1, z0] + c[x1, y0, z0] - c[x0, y0, z0]
    )
