"""Class-agnostic mask prediction, score heads, and the training loss.

Object scores use column 0 for "object" and column 1 for "no object".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InputError, ShapeError
from .matcher import rectangular_assignment
from .numerics import MlpParams, matmul, mlp_forward, rectify, sigmoid, softmax_rows

OBJECT_COL = 0
DICE_EPS = 1e-6
MASK_THRESHOLD = 0.5
_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class MaskSet:
    probs: np.ndarray        # N x h x w, values in [0, 1]
    obj_scores: np.ndarray   # N x 2, rows sum to 1
    iou_scores: np.ndarray   # N x 1, nonnegative

    def __post_init__(self):
        n = self.probs.shape[0]
        if self.probs.ndim != 3:
            raise ShapeError(f"mask probabilities must be N x h x w, got {self.probs.shape}")
        if self.obj_scores.shape != (n, 2):
            raise ShapeError(f"object scores must be {n} x 2, got {self.obj_scores.shape}")
        if self.iou_scores.shape != (n, 1):
            raise ShapeError(f"mask-IoU scores must be {n} x 1, got {self.iou_scores.shape}")
        if np.any(self.probs < 0) or np.any(self.probs > 1):
            raise InputError("mask probabilities outside [0, 1]")
        if np.any(np.abs(self.obj_scores.sum(axis=1) - 1) > 1e-6):
            raise InputError("object score rows must sum to 1")
        if np.any(self.iou_scores < 0):
            raise InputError("mask-IoU scores must be nonnegative")

    def __len__(self) -> int:
        return self.probs.shape[0]

    def permuted(self, order) -> "MaskSet":
        """Rows reindexed so that row ``s`` of the result is row ``order[s]`` here."""
        return MaskSet(self.probs[order], self.obj_scores[order], self.iou_scores[order])


@dataclass(frozen=True)
class LossWeights:
    obj: float = 2.0
    iou: float = 2.0
    mask: float = 5.0
    dice: float = 5.0

    def __post_init__(self):
        if min(self.obj, self.iou, self.mask, self.dice) < 0:
            raise InputError("loss weights must be nonnegative")


def mask_logits(emb, feat) -> np.ndarray:
    emb = np.asarray(emb)
    feat = np.asarray(feat)
    if emb.ndim != 2 or feat.ndim != 3:
        raise ShapeError(f"expected N x C embeddings and C x h x w features, got {emb.shape}, {feat.shape}")
    if emb.shape[1] != feat.shape[0]:
        raise ShapeError(f"embedding dim {emb.shape[1]} != feature channels {feat.shape[0]}")
    c, h, w = feat.shape
    return matmul(emb, feat.reshape(c, h * w)).reshape(emb.shape[0], h, w)


def predict_masks(emb, feat) -> np.ndarray:
    """Per-query mask probabilities ``sigmoid(emb @ feat)`` over the feature grid."""
    return sigmoid(mask_logits(emb, feat))


def predict_scores(emb, obj_params: MlpParams, iou_params: MlpParams):
    if obj_params.out_dim != 2:
        raise ShapeError(f"object head must have 2 outputs, has {obj_params.out_dim}")
    if iou_params.out_dim != 1:
        raise ShapeError(f"mask-IoU head must have 1 output, has {iou_params.out_dim}")
    obj = softmax_rows(mlp_forward(emb, obj_params))
    iou = rectify(mlp_forward(emb, iou_params))
    return obj, iou


# --------------------------------------------------------------------------
# Per-pair mask losses
# --------------------------------------------------------------------------

def _check_gt(gt: np.ndarray, grid) -> None:
    if gt.ndim != 3 or gt.shape[1:] != tuple(grid):
        raise ShapeError(f"ground-truth masks {gt.shape} do not match grid {tuple(grid)}")
    if not np.all((gt == 0) | (gt == 1)):
        raise InputError("ground-truth masks must be binary")


def bce_from_probs(p: np.ndarray, g: np.ndarray) -> float:
    """Mean per-pixel binary cross-entropy for a binary target."""
    picked = np.where(g > 0.5, p, 1.0 - p)
    return float(-np.mean(np.log(np.maximum(picked, _LOG_FLOOR))))


def dice_loss(p: np.ndarray, g: np.ndarray) -> float:
    inter = float(np.sum(p * g))
    total = float(np.sum(p) + np.sum(g))
    return 1.0 - (2.0 * inter + DICE_EPS) / (total + DICE_EPS)


def mask_iou(pred_probs: np.ndarray, gt: np.ndarray) -> float:
    pb = pred_probs > MASK_THRESHOLD
    gb = gt > 0.5
    union = np.count_nonzero(pb | gb)
    return 0.0 if union == 0 else np.count_nonzero(pb & gb) / union


def pairwise_mask_cost(probs, gt_masks, weights: LossWeights = LossWeights()) -> np.ndarray:
    """``N x G`` matrix of weighted BCE + Dice between every prediction and target."""
    probs = np.asarray(probs, dtype=np.float64)
    gt = np.asarray(gt_masks, dtype=np.float64)
    _check_gt(gt, probs.shape[1:])
    n, g = probs.shape[0], gt.shape[0]
    out = np.zeros((n, g))
    for i in range(n):
        for j in range(g):
            out[i, j] = weights.mask * bce_from_probs(probs[i], gt[j]) + weights.dice * dice_loss(probs[i], gt[j])
    return out


def training_assignment(pred: MaskSet, gt_masks, weights: LossWeights = LossWeights()) -> list[tuple[int, int]]:
    """One-to-one (query, target) pairs minimising the mask-only matching cost."""
    gt = np.asarray(gt_masks)
    if gt.shape[0] > len(pred):
        raise CapacityError(f"{gt.shape[0]} targets but only {len(pred)} queries")
    if gt.shape[0] == 0:
        return []
    cost = pairwise_mask_cost(pred.probs, gt, weights)
    return rectangular_assignment(cost)


# --------------------------------------------------------------------------
# Total loss
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LossBreakdown:
    total: float
    obj: float
    iou: float
    mask: float
    dice: float


def _check_assignment(assignment, n: int, g: int) -> None:
    qs = [q for q, _ in assignment]
    ts = [t for _, t in assignment]
    if len(set(qs)) != len(qs) or len(set(ts)) != len(ts):
        raise InputError("assignment must be one-to-one")
    if any(not 0 <= q < n for q in qs) or any(not 0 <= t < g for t in ts):
        raise InputError("assignment index out of range")


def loss_total(pred: MaskSet, assignment, gt_masks, weights: LossWeights = LossWeights()) -> LossBreakdown:
    gt = np.asarray(gt_masks, dtype=np.float64)
    if gt.size == 0:
        gt = gt.reshape((0,) + pred.probs.shape[1:])
    _check_gt(gt, pred.probs.shape[1:])
    n = len(pred)
    _check_assignment(assignment, n, gt.shape[0])

    labels = np.full(n, 1 - OBJECT_COL)
    for q, _ in assignment:
        labels[q] = OBJECT_COL
    picked = pred.obj_scores.astype(np.float64)[np.arange(n), labels]
    l_obj = float(-np.mean(np.log(np.maximum(picked, _LOG_FLOOR))))

    l_mask = l_dice = l_iou = 0.0
    if assignment:
        probs = pred.probs.astype(np.float64)
        for q, t in assignment:
            l_mask += bce_from_probs(probs[q], gt[t])
            l_dice += dice_loss(probs[q], gt[t])
            l_iou += abs(float(pred.iou_scores[q, 0]) - mask_iou(probs[q], gt[t]))
        m = len(assignment)
        l_mask, l_dice, l_iou = l_mask / m, l_dice / m, l_iou / m

    total = weights.obj * l_obj + weights.iou * l_iou + weights.mask * l_mask + weights.dice * l_dice
    return LossBreakdown(total, l_obj, l_iou, l_mask, l_dice)


def mask_losses_from_logits(logits, assignment, gt_masks):
    """``L_mask`` and ``L_dice`` with their gradients w.r.t. every mask logit.

    Returns ``(l_mask, l_dice, grad_mask, grad_dice)``; gradients have the
    shape of ``logits`` and are zero on unmatched queries.
    """
    z = np.asarray(logits, dtype=np.float64)
    gt = np.asarray(gt_masks, dtype=np.float64)
    grad_mask = np.zeros_like(z)
    grad_dice = np.zeros_like(z)
    if not assignment:
        return 0.0, 0.0, grad_mask, grad_dice
    m = len(assignment)
    l_mask = l_dice = 0.0
    for q, t in assignment:
        zq, g = z[q], gt[t]
        p = sigmoid(zq)
        pixels = zq.size
        # softplus(z) - g*z, written to avoid overflow
        l_mask += float(np.mean(np.maximum(zq, 0) - g * zq + np.log1p(np.exp(-np.abs(zq)))))
        grad_mask[q] = (p - g) / (pixels * m)

        inter = float(np.sum(p * g))
        denom = float(np.sum(p) + np.sum(g)) + DICE_EPS
        num = 2.0 * inter + DICE_EPS
        l_dice += 1.0 - num / denom
        d_dp = -(2.0 * g * denom - num) / denom**2
        grad_dice[q] = d_dp * p * (1.0 - p) / m
    return l_mask / m, l_dice / m, grad_mask, grad_dice
