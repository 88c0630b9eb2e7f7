"""Open-vocabulary mask classification against text embeddings."""

from __future__ import annotations

import numpy as np

from .errors import InputError, ShapeError
from .mask_head import MASK_THRESHOLD, OBJECT_COL
from .numerics import cosine_rows


def resize_nearest(masks: np.ndarray, grid: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbour resample of ``N x h x w`` masks onto ``grid``."""
    n, h, w = masks.shape
    gh, gw = grid
    if (h, w) == (gh, gw):
        return masks
    rows = np.minimum((np.arange(gh) + 0.5) * h / gh, h - 1).astype(np.int64)
    cols = np.minimum((np.arange(gw) + 0.5) * w / gw, w - 1).astype(np.int64)
    return masks[:, rows][:, :, cols]


def mask_pool(feat, masks) -> np.ndarray:
    """Mean feature vector over each mask's pixels above 0.5 (zero vector if none)."""
    feat = np.asarray(feat)
    masks = np.asarray(masks)
    if feat.ndim != 3 or masks.ndim != 3:
        raise ShapeError(f"expected D x h x w features and N x h x w masks, got {feat.shape}, {masks.shape}")
    d = feat.shape[0]
    masks = resize_nearest(masks, feat.shape[1:])
    flat = feat.reshape(d, -1)
    out = np.zeros((masks.shape[0], d), dtype=feat.dtype)
    for i, m in enumerate(masks.reshape(masks.shape[0], -1)):
        sel = m > MASK_THRESHOLD
        count = np.count_nonzero(sel)
        if count:
            out[i] = flat[:, sel].sum(axis=1) / count
    return out


def classify(visual, text) -> np.ndarray:
    """Raw class scores: cosine similarity of each visual row to each text row."""
    visual = np.asarray(visual)
    text = np.asarray(text)
    if text.ndim != 2 or text.shape[0] < 1:
        raise ShapeError(f"text embeddings must be L x D with L >= 1, got {text.shape}")
    if visual.ndim != 2 or visual.shape[1] != text.shape[1]:
        raise ShapeError(f"visual dim {visual.shape} does not match text dim {text.shape}")
    return cosine_rows(visual, text)


def refine(raw, obj, iou, use_obj: bool = True, use_iou: bool = True) -> np.ndarray:
    """Weight each query's class scores by its object probability and predicted IoU.

    ``use_obj``/``use_iou`` switch the individual factors off for ablations.
    """
    raw = np.asarray(raw)
    obj = np.asarray(obj)
    iou = np.asarray(iou)
    n = raw.shape[0]
    if obj.shape != (n, 2) or iou.shape != (n, 1):
        raise ShapeError(f"scores {obj.shape}/{iou.shape} do not fit {n} queries")
    if np.any(iou < 0):
        raise InputError("mask-IoU scores must be nonnegative")
    weight = np.ones((n, 1), dtype=np.result_type(raw, obj, iou))
    if use_obj:
        weight = weight * obj[:, OBJECT_COL:OBJECT_COL + 1]
    if use_iou:
        weight = weight * iou
    return raw * weight


def assign_categories(refined) -> tuple[np.ndarray, np.ndarray]:
    refined = np.asarray(refined)
    if refined.ndim != 2 or refined.shape[1] < 1:
        raise ShapeError(f"refined scores must be N x L with L >= 1, got {refined.shape}")
    # np.argmax returns the first maximum, i.e. the smallest index on ties
    cats = np.argmax(refined, axis=1)
    return cats, refined[np.arange(refined.shape[0]), cats]
