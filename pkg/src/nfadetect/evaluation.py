"""Object-level precision/recall/F1 between predicted and true regions.

Matching is one-to-one and greedy by descending pixel overlap; any shared
pixel qualifies a pair.  Dataset results are micro-averaged (counts summed
over images before computing the ratios).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .baselines import Region, region_order_key

if TYPE_CHECKING:
    from .detector import Detection


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


def match_objects(
    predictions: Sequence[Region], ground_truth: Sequence[Region]
) -> tuple[int, int, int]:
    """Greedy one-to-one matching by descending overlap; returns (tp, fp, fn).

    Ties in overlap are broken by the canonical (min y, min x) order of the
    ground-truth region, then of the prediction, so the result does not
    depend on input ordering.
    """
    preds = sorted(predictions, key=region_order_key)
    gts = sorted(ground_truth, key=region_order_key)
    pairs = []
    for gi, gt in enumerate(gts):
        for pi, pred in enumerate(preds):
            overlap = len(gt.pixel_set & pred.pixel_set)
            if overlap >= 1:
                pairs.append((-overlap, gi, pi))
    pairs.sort()
    pred_used = [False] * len(preds)
    gt_used = [False] * len(gts)
    tp = 0
    for _, gi, pi in pairs:
        if gt_used[gi] or pred_used[pi]:
            continue
        gt_used[gi] = True
        pred_used[pi] = True
        tp += 1
    return tp, len(preds) - tp, len(gts) - tp


def compute_prf(tp: int, fp: int, fn: int) -> EvalReport:
    """Precision/recall/F1 from counts.

    With no predictions precision is 1 (no false alarm was made); with no
    ground truth recall is 1.  F1 is 2PR/(P+R), or 0 when both P and R are 0;
    it is evaluated in the equivalent count form 2tp/(2tp+fp+fn), which under
    the conventions above coincides for every count combination and rounds
    exactly against hand-computed fractions.
    """
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be non-negative")
    precision = tp / (tp + fp) if tp + fp > 0 else 1.0
    recall = tp / (tp + fn) if tp + fn > 0 else 1.0
    f1 = 2 * tp / (2 * tp + fp + fn) if tp + fp + fn > 0 else 1.0
    return EvalReport(tp=tp, fp=fp, fn=fn, precision=precision, recall=recall, f1=f1)


def evaluate_dataset(
    pairs: Iterable[tuple[Sequence[Region], Sequence[Region]]]
) -> EvalReport:
    """Micro-averaged report over (predictions, ground truth) image pairs."""
    tp = fp = fn = 0
    n = 0
    for preds, gts in pairs:
        itp, ifp, ifn = match_objects(preds, gts)
        tp, fp, fn = tp + itp, fp + ifp, fn + ifn
        n += 1
    if n == 0:
        raise ValueError("evaluate_dataset needs at least one image pair")
    return compute_prf(tp, fp, fn)


def region_from_detection(det: Detection) -> Region:
    """The detection's 2D footprint rectangle as a Region."""
    b = det.box
    ys, xs = np.mgrid[b.y0 : b.y0 + b.h, b.x0 : b.x0 + b.w]
    return Region(np.column_stack([ys.ravel(), xs.ravel()]))
