"""Exhaustive 3D-box detection with a minimal-volume-per-count table.

Every axis-aligned box whose 2D footprint area is at most ``max_area`` is a
candidate; among boxes holding exactly kappa points only the smallest-volume
one can be the most significant (significance decreases with volume at fixed
count), so a table of minimal volumes indexed by kappa reduces the
significance computations to at most ``max_area`` of them.  Candidate boxes
are ranked by the canonical order (w, h, zlen, x0, y0, z0), all ascending:
the first box reaching a count at the minimal volume wins ties, which makes
the output deterministic.

The table construction here walks box shapes sorted by volume (canonical
order breaking volume ties), so each table slot is written at most once and
whole shapes are skipped when every count they could reach is already
settled.  The result is identical to updating the table along the canonical
enumeration with a strict volume test.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .integral import IntegralVolume, build_integral
from .nfa import eta_for_box, significance_hoeffding
from .transform import TransformParams, build_point_cloud

if TYPE_CHECKING:
    from .io import ScoreMap


class SaturationWarning(UserWarning):
    """The point cloud fills its whole space (p = 1); no test is possible."""


@dataclass(frozen=True)
class DetectorParams:
    max_area: int = 64
    s_min: float = 0.0
    transform: TransformParams = TransformParams()
    relative_factor: float = 0.8

    def __post_init__(self):
        if self.max_area < 1:
            raise ValueError(f"max_area must be >= 1, got {self.max_area}")
        if not (0.0 < self.relative_factor <= 1.0):
            raise ValueError(
                f"relative_factor must be in (0, 1], got {self.relative_factor}"
            )


@dataclass(frozen=True)
class Box3D:
    """Axis-aligned 3D box: footprint origin/size, z extent, point count.

    The volume ``nu`` is always w*h*zlen.  ``kappa`` is the number of cloud
    points inside the closed box.
    """

    x0: int
    y0: int
    w: int
    h: int
    z0: int
    zlen: int
    kappa: int = 0

    @property
    def nu(self) -> int:
        return self.w * self.h * self.zlen


@dataclass(frozen=True)
class Detection:
    box: Box3D
    significance: float
    rank: int


@dataclass
class KappaTable:
    """Minimal volume (and the first box reaching it) per exact point count."""

    tab: np.ndarray  # float64, length max_area + 1, +inf where no box seen
    idx: list[Box3D | None]


def min_volume_table(iv: IntegralVolume, max_area: int) -> KappaTable:
    """Minimal-volume box per exact count over all footprints <= max_area.

    Box coordinates in the result are local to the cloud grid underlying
    ``iv`` (the caller shifts them back to image coordinates).
    """
    tab = np.full(max_area + 1, np.inf)
    idx: list[Box3D | None] = [None] * (max_area + 1)
    big_w, big_h, big_b = iv.width, iv.height, iv.bins
    if big_w == 0 or big_h == 0:
        return KappaTable(tab, idx)

    pad = iv.padded
    ii2 = pad[:, :, big_b]
    shapes = [
        (w, h)
        for w in range(1, min(max_area, big_w) + 1)
        for h in range(1, min(max_area // w, big_h) + 1)
    ]
    # Footprint counts cap the reachable kappa per shape (one point per pixel
    # column), which is what allows skipping whole shapes below.
    maxcnt = {}
    for w, h in shapes:
        tot = ii2[w:, h:] - ii2[:-w, h:] - ii2[w:, :-h] + ii2[:-w, :-h]
        maxcnt[w, h] = int(tot.max())
    gmax = min(max_area, max(maxcnt.values()))

    triples = sorted(
        (w * h * zlen, w, h, zlen)
        for (w, h) in shapes
        for zlen in range(1, big_b + 1)
    )
    filled = np.zeros(gmax + 1, dtype=bool)
    remaining = gmax + 1
    min_unfilled = 0
    for nu, w, h, zlen in triples:
        if remaining == 0:
            break
        if min_unfilled > maxcnt[w, h]:
            continue
        counts = pad[w:, h:, zlen:] - pad[:-w, h:, zlen:]
        counts -= pad[w:, :-h, zlen:]
        counts += pad[:-w, :-h, zlen:]
        counts -= pad[w:, h:, :-zlen]
        counts += pad[:-w, h:, :-zlen]
        counts += pad[w:, :-h, :-zlen]
        counts -= pad[:-w, :-h, :-zlen]
        flat = counts.ravel()
        present = np.bincount(flat, minlength=gmax + 1)
        hits = np.nonzero(~filled & (present[: gmax + 1] > 0))[0]
        for k in hits:
            first = int(np.argmax(flat == k))  # C order == (x0, y0, z0) order
            x0, y0, z0 = np.unravel_index(first, counts.shape)
            tab[k] = float(nu)
            idx[k] = Box3D(
                x0=int(x0), y0=int(y0), w=w, h=h, z0=int(z0), zlen=zlen, kappa=int(k)
            )
            filled[k] = True
            remaining -= 1
        if hits.size and remaining:
            min_unfilled = int(np.argmax(~filled))
    return KappaTable(tab, idx)


def select_detections(
    candidates: list[tuple[Box3D, float]], s_min: float, relative_factor: float
) -> list[Detection]:
    """Keep candidates with S > s_min and S > relative_factor * S_max.

    Input order breaks significance ties (candidates arrive in ascending
    kappa); ranks are assigned 0..n-1 along descending significance.
    """
    if not candidates:
        return []
    ordered = sorted(candidates, key=lambda c: -c[1])
    s_max = ordered[0][1]
    cut = max(s_min, relative_factor * s_max)
    return [
        Detection(box=box, significance=s, rank=i)
        for i, (box, s) in enumerate(c for c in ordered if c[1] > cut)
    ]


def detect(smap: ScoreMap, params: DetectorParams) -> list[Detection]:
    """Run the full pipeline on a score map and return ranked detections.

    Returns an empty list when no pixel survives the score floor, or (with a
    :class:`SaturationWarning`) when the cloud saturates its space.
    Detection coordinates are in the image frame.
    """
    cloud = build_point_cloud(smap, params.transform)
    if cloud.is_empty:
        return []
    if cloud.p >= 1.0:
        warnings.warn(
            "point cloud saturates its bounding space (p = 1); no detections",
            SaturationWarning,
            stacklevel=2,
        )
        return []
    iv = build_integral(cloud)
    table = min_volume_table(iv, params.max_area)
    space = (cloud.width, cloud.height, cloud.bins)

    candidates = []
    for kappa in range(1, params.max_area + 1):
        nu = table.tab[kappa]
        if not np.isfinite(nu):
            continue
        if kappa / nu <= cloud.p:
            continue
        local = table.idx[kappa]
        eta = eta_for_box(space, (local.w, local.h, local.zlen))
        s = significance_hoeffding(kappa, int(nu), cloud.p, eta)
        box = Box3D(
            x0=local.x0 + cloud.x_origin,
            y0=local.y0 + cloud.y_origin,
            w=local.w,
            h=local.h,
            z0=local.z0,
            zlen=local.zlen,
            kappa=kappa,
        )
        candidates.append((box, s))
    return select_detections(candidates, params.s_min, params.relative_factor)


def footprint_iou(a: Box3D, b: Box3D) -> float:
    """Intersection-over-union of the 2D footprints of two boxes."""
    ix = min(a.x0 + a.w, b.x0 + b.w) - max(a.x0, b.x0)
    iy = min(a.y0 + a.h, b.y0 + b.h) - max(a.y0, b.y0)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.w * a.h + b.w * b.h - inter
    return inter / union


def merge_overlapping(
    detections: list[Detection], iou_threshold: float = 0.5
) -> list[Detection]:
    """Union detections whose footprints overlap heavily (presentation only).

    Walks detections by rank; each one joins the first group whose union
    footprint it overlaps with IoU > threshold, keeping the group's
    top-ranked member for significance and z extent.
    """
    groups: list[tuple[Detection, Box3D]] = []  # (representative, union box)
    for det in sorted(detections, key=lambda d: d.rank):
        for i, (rep, ub) in enumerate(groups):
            if footprint_iou(ub, det.box) > iou_threshold:
                x0 = min(ub.x0, det.box.x0)
                y0 = min(ub.y0, det.box.y0)
                x1 = max(ub.x0 + ub.w, det.box.x0 + det.box.w)
                y1 = max(ub.y0 + ub.h, det.box.y0 + det.box.h)
                merged = Box3D(
                    x0=x0, y0=y0, w=x1 - x0, h=y1 - y0,
                    z0=rep.box.z0, zlen=rep.box.zlen, kappa=rep.box.kappa,
                )
                groups[i] = (rep, merged)
                break
        else:
            groups.append((det, det.box))
    return [
        Detection(box=ub, significance=rep.significance, rank=i)
        for i, (rep, ub) in enumerate(groups)
    ]
