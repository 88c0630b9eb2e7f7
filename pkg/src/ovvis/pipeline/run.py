"""Per-video inference: association, classification and track assembly."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..classifier import assign_categories, classify, mask_pool, refine
from ..evaluator import VideoInstancePrediction
from ..mask_head import MASK_THRESHOLD
from ..matcher import QueryTracker, Strategy, inverse_permutation
from .bundle import Bundle
from .formats import video_predictions_entry


@dataclass
class VideoRun:
    video: str
    strategy: Strategy
    predictions: list[VideoInstancePrediction]
    assignments: list[np.ndarray]
    num_frames: int
    grid: tuple[int, int]

    def to_json(self) -> dict:
        return video_predictions_entry(self.video, self.num_frames, self.grid, self.strategy.label,
                                       self.predictions)


def run_video(bundle: Bundle, strategy: Strategy, use_obj: bool = True, use_iou: bool = True) -> VideoRun:
    """Track every query slot through the video and classify each track.

    A track's category is the argmax of its refined class scores averaged
    over the frames where its mask is nonempty; the confidence is that
    averaged score.  Slots that never produce a nonempty mask are dropped.
    """
    text = bundle.text_embeddings()
    n, grid = bundle.num_queries, bundle.grid
    tracker = QueryTracker(strategy)
    score_sum = np.zeros((n, text.shape[0]), dtype=np.float64)
    visible = np.zeros(n, dtype=np.int64)
    slot_masks: list[list] = [[] for _ in range(n)]
    assignments = []

    for frame in bundle.frames():
        ids, _ = tracker.step(frame.embeddings)
        assignments.append(ids)
        masks = frame.masks.permuted(inverse_permutation(ids))
        pooled = mask_pool(frame.clip_features, masks.probs)
        refined = refine(classify(pooled, text), masks.obj_scores, masks.iou_scores, use_obj, use_iou)
        binary = masks.probs > MASK_THRESHOLD
        for s in range(n):
            if binary[s].any():
                slot_masks[s].append(binary[s])
                score_sum[s] += refined[s]
                visible[s] += 1
            else:
                slot_masks[s].append(None)

    preds = []
    live = np.flatnonzero(visible)
    if live.size:
        mean = score_sum[live] / visible[live, None]
        cats, conf = assign_categories(mean)
        for s, c, v in zip(live, cats, conf):
            preds.append(VideoInstancePrediction(int(s), int(c), float(v), slot_masks[s], bundle.video))
    return VideoRun(bundle.video, strategy, preds, assignments, bundle.num_frames, grid)


def run_videos(bundles: list[Bundle], strategy: Strategy, workers: int = 1, **kwargs) -> list[VideoRun]:
    """Run several videos, each with its own tracker; output order follows ``bundles``."""
    if workers <= 1:
        return [run_video(b, strategy, **kwargs) for b in bundles]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: run_video(b, strategy, **kwargs), bundles))
