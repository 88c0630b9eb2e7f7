"""Open-vocabulary video instance segmentation: query association,
mask classification, losses and evaluation on precomputed features."""

from .classifier import assign_categories, classify, mask_pool, refine
from .evaluator import evaluate, id_switches, st_iou
from .mask_head import LossWeights, MaskSet, loss_total, predict_masks, predict_scores, training_assignment
from .matcher import MemoryBank, QueryTracker, Strategy, cost_map, frame_cost, hungarian, match_topk, step

__version__ = "0.1.0"

__all__ = [
    "LossWeights",
    "MaskSet",
    "MemoryBank",
    "QueryTracker",
    "Strategy",
    "assign_categories",
    "classify",
    "cost_map",
    "evaluate",
    "frame_cost",
    "hungarian",
    "id_switches",
    "loss_total",
    "mask_pool",
    "match_topk",
    "predict_masks",
    "predict_scores",
    "refine",
    "st_iou",
    "step",
    "training_assignment",
]
