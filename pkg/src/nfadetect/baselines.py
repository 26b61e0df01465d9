"""Fixed-threshold baselines: plain binarization and threshold + opening.

Both produce binary masks; connected components (8-connectivity) turn a mask
into the object-level regions the evaluation works with.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage

from .io import BinaryMask, ScoreMap

_EIGHT_CONN = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class Region:
    """An 8-connected pixel component."""

    pixels: np.ndarray  # int64, shape (area, 2) of (y, x), lexicographically sorted

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.int64).reshape(-1, 2)
        order = np.lexsort((arr[:, 1], arr[:, 0]))
        arr = arr[order]
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def area(self) -> int:
        return self.pixels.shape[0]

    @property
    def centroid(self) -> tuple[float, float]:
        """(x, y) mean of the member pixels."""
        return float(self.pixels[:, 1].mean()), float(self.pixels[:, 0].mean())

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        """(x0, y0, w, h) of the tight bounding box."""
        ys, xs = self.pixels[:, 0], self.pixels[:, 1]
        return (
            int(xs.min()),
            int(ys.min()),
            int(xs.max() - xs.min() + 1),
            int(ys.max() - ys.min() + 1),
        )

    @cached_property
    def pixel_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((int(y), int(x)) for y, x in self.pixels)


def threshold_binarize(smap: ScoreMap, theta: float) -> BinaryMask:
    """Mask of pixels with score strictly above theta."""
    if not (0.0 <= theta <= 1.0):
        raise ValueError(f"theta must be in [0, 1], got {theta}")
    return BinaryMask((smap.scores > theta).astype(np.uint8))


def morphological_open(mask: BinaryMask, radius: int = 1) -> BinaryMask:
    """Erosion then dilation with a square element of side 2*radius + 1.

    Pixels outside the image count as background for both passes.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    element = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    eroded = ndimage.binary_erosion(mask.values, structure=element, border_value=0)
    opened = ndimage.binary_dilation(eroded, structure=element, border_value=0)
    return BinaryMask(opened.astype(np.uint8))


def connected_components(mask: BinaryMask) -> list[Region]:
    """8-connected components, ordered by their (min y, min x) corner."""
    labels, n = ndimage.label(mask.values, structure=_EIGHT_CONN)
    regions = []
    for lab in range(1, n + 1):
        ys, xs = np.nonzero(labels == lab)
        regions.append(Region(np.column_stack([ys, xs])))
    regions.sort(key=region_order_key)
    return regions


def region_order_key(region: Region) -> tuple[int, int]:
    """Canonical (min y, min x) ordering key, shared with the evaluation."""
    return int(region.pixels[:, 0].min()), int(region.pixels[:, 1].min())
