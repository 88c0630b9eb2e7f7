"""Video instance segmentation AP.

Predictions and ground truth are whole-video tracks.  Matching uses
spatio-temporal IoU (intersections and unions summed over frames), and
precision is read off a 101-point interpolated precision/recall curve at
IoU thresholds 0.50:0.05:0.95.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError, UndefinedMetricError

DEFAULT_THRESHOLDS = tuple(np.round(np.linspace(0.5, 0.95, 10), 2).tolist())
RECALL_POINTS = np.linspace(0.0, 1.0, 101)


@dataclass
class VideoInstancePrediction:
    track_id: int
    category: int
    confidence: float
    masks: list  # per frame: bool array or None when empty
    video: str = ""

    def __post_init__(self):
        if not np.isfinite(self.confidence):
            raise InputError(f"track {self.track_id}: confidence must be finite")


@dataclass
class GroundTruthInstance:
    instance_id: int
    category: int
    masks: list
    video: str = ""

    def __post_init__(self):
        if all(m is None or not np.any(m) for m in self.masks):
            raise InputError(f"ground-truth instance {self.instance_id} has no nonempty frame")


@dataclass(frozen=True)
class Category:
    id: int
    name: str
    novel: bool = False


def _area(m) -> int:
    return 0 if m is None else int(np.count_nonzero(m))


def st_iou(pred_masks: Sequence, gt_masks: Sequence) -> float:
    """Sum of per-frame intersections over sum of per-frame unions (0 when both empty)."""
    if len(pred_masks) != len(gt_masks):
        raise InputError(f"video lengths differ: {len(pred_masks)} vs {len(gt_masks)}")
    inter = union = 0
    for p, g in zip(pred_masks, gt_masks):
        if p is None and g is None:
            continue
        if p is None:
            union += _area(g)
        elif g is None:
            union += _area(p)
        else:
            pb = np.asarray(p, dtype=bool)
            gb = np.asarray(g, dtype=bool)
            inter += int(np.count_nonzero(pb & gb))
            union += int(np.count_nonzero(pb | gb))
    return 0.0 if union == 0 else inter / union


def interpolated_ap(matched: np.ndarray, num_gt: int) -> float:
    """101-point interpolated AP for detections already sorted by confidence."""
    if num_gt == 0:
        raise UndefinedMetricError("AP undefined without ground truth")
    if len(matched) == 0:
        return 0.0
    tp = np.cumsum(matched, dtype=np.float64)
    fp = np.cumsum(~matched, dtype=np.float64)
    recall = tp / num_gt
    precision = tp / (tp + fp)
    for i in range(len(precision) - 1, 0, -1):
        if precision[i] > precision[i - 1]:
            precision[i - 1] = precision[i]
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    q = np.where(idx < len(precision), precision[np.minimum(idx, len(precision) - 1)], 0.0)
    return float(np.mean(q))


@dataclass
class ApResult:
    AP: float
    AP_n: float | None
    per_threshold: dict[float, float]
    per_category: dict[int, float]
    category_names: dict[int, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "AP": self.AP,
            "AP_n": self.AP_n,
            "per_threshold": {f"{t:.2f}": v for t, v in self.per_threshold.items()},
            "per_category": {
                self.category_names.get(c, str(c)): v for c, v in sorted(self.per_category.items())
            },
        }


def _sorted_detections(preds: Sequence[VideoInstancePrediction], category: int):
    dets = [p for p in preds if p.category == category]
    return sorted(dets, key=lambda p: (-p.confidence, p.video, p.track_id))


def match_category(dets, gts, threshold: float, ious: dict) -> np.ndarray:
    """Greedy matching in confidence order; each det takes the best free GT above ``threshold``."""
    taken: set[int] = set()
    matched = np.zeros(len(dets), dtype=bool)
    for d_idx, det in enumerate(dets):
        best, best_iou = -1, threshold
        for g_idx, gt in enumerate(gts):
            if g_idx in taken or gt.video != det.video:
                continue
            iou = ious[d_idx, g_idx]
            if iou >= best_iou and (best < 0 or iou > best_iou):
                best, best_iou = g_idx, iou
        if best >= 0:
            taken.add(best)
            matched[d_idx] = True
    return matched


def evaluate(
    preds: Sequence[VideoInstancePrediction],
    gts: Sequence[GroundTruthInstance],
    categories: Sequence[Category],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> ApResult:
    if not gts:
        raise UndefinedMetricError("no ground-truth instances")
    known = {c.id for c in categories}
    for g in gts:
        if g.category not in known:
            raise InputError(f"ground-truth category {g.category} not declared")
    present = sorted({g.category for g in gts})

    table = np.zeros((len(thresholds), len(present)))
    for c_idx, cat in enumerate(present):
        dets = _sorted_detections(preds, cat)
        cat_gts = [g for g in gts if g.category == cat]
        ious = {
            (i, j): st_iou(d.masks, g.masks) if d.video == g.video else 0.0
            for i, d in enumerate(dets)
            for j, g in enumerate(cat_gts)
        }
        for t_idx, thr in enumerate(thresholds):
            matched = match_category(dets, cat_gts, thr, ious)
            table[t_idx, c_idx] = interpolated_ap(matched, len(cat_gts))

    novel = {c.id for c in categories if c.novel}
    novel_cols = [i for i, c in enumerate(present) if c in novel]
    ap_n = float(table[:, novel_cols].mean(axis=1).mean()) if novel_cols else None
    return ApResult(
        AP=float(table.mean(axis=1).mean()),
        AP_n=ap_n,
        per_threshold={float(t): float(v) for t, v in zip(thresholds, table.mean(axis=1))},
        per_category={c: float(v) for c, v in zip(present, table.mean(axis=0))},
        category_names={c.id: c.name for c in categories},
    )


def _frame_iou(p, g) -> float:
    if p is None or g is None:
        return 0.0
    union = np.count_nonzero(p | g)
    return 0.0 if union == 0 else np.count_nonzero(p & g) / union


def id_switches(preds: Sequence[VideoInstancePrediction], gts: Sequence[GroundTruthInstance],
                iou_threshold: float = 0.5) -> int:
    """Count changes of the covering track id along each ground-truth instance.

    In each frame where the instance is visible, the covering track is the
    prediction with the highest per-frame IoU at or above ``iou_threshold``
    (smaller track id on ties).  Frames without a covering track are skipped.
    """
    switches = 0
    for gt in gts:
        cands = sorted((p for p in preds if p.video == gt.video), key=lambda p: p.track_id)
        last = None
        for f, g in enumerate(gt.masks):
            if g is None or not np.any(g):
                continue
            g = np.asarray(g, dtype=bool)
            best, best_iou = None, iou_threshold
            for p in cands:
                m = p.masks[f]
                iou = _frame_iou(None if m is None else np.asarray(m, dtype=bool), g)
                if iou >= best_iou and (best is None or iou > best_iou):
                    best, best_iou = p.track_id, iou
            if best is None:
                continue
            if last is not None and best != last:
                switches += 1
            last = best
    return switches
