"""Video bundles: a ``manifest.json`` plus TNSR tensor files.

Manifest fields (paths are relative to the bundle directory)::

    format            "ovvis-bundle"
    version           1
    video             video name used in prediction/GT documents
    num_queries       N
    grid              [h, w] of the mask grid
    categories        [{"id": int, "name": str, "novel": bool}, ...]
    text_embeddings   L x D tensor, row l = category with id l
    heads             optional {"obj": [w1,b1,w2,b2,w3,b3], "iou": [...]}
    ground_truth      optional ground-truth JSON document
    frames            list, one object per frame:
        embeddings      N x E query embeddings
        masks           N x h x w probabilities        (or)
        pixel_features  E x h x w, masks = sigmoid(embeddings @ features)
        obj_scores      N x 2   (optional if heads.obj given)
        iou_scores      N x 1   (optional if heads.iou given)
        clip_features   D x h' x w' classification feature map
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from ..errors import InputError
from ..evaluator import Category
from ..mask_head import MaskSet, predict_masks, predict_scores
from ..numerics import MlpParams
from . import tensorfile
from .formats import read_json

BUNDLE_FORMAT = "ovvis-bundle"
MANIFEST = "manifest.json"


@dataclass
class FrameInputs:
    index: int
    embeddings: np.ndarray
    masks: MaskSet
    clip_features: np.ndarray


class Bundle:
    def __init__(self, root, manifest: dict):
        self.root = Path(root)
        self.manifest = manifest
        self._validate()

    @classmethod
    def open(cls, root) -> "Bundle":
        root = Path(root)
        return cls(root, read_json(root / MANIFEST))

    def _validate(self) -> None:
        m = self.manifest
        if not isinstance(m, dict) or m.get("format") != BUNDLE_FORMAT:
            raise InputError(f"{self.root}: not an {BUNDLE_FORMAT} manifest")
        for key in ("video", "num_queries", "grid", "categories", "text_embeddings", "frames"):
            if key not in m:
                raise InputError(f"{self.root}: manifest lacks {key!r}")
        if not m["frames"]:
            raise InputError(f"{self.root}: bundle has no frames")
        ids = [c["id"] for c in m["categories"]]
        if ids != list(range(len(ids))):
            raise InputError(f"{self.root}: category ids must be 0..L-1 in order")

    @property
    def video(self) -> str:
        return self.manifest["video"]

    @property
    def num_frames(self) -> int:
        return len(self.manifest["frames"])

    @property
    def num_queries(self) -> int:
        return int(self.manifest["num_queries"])

    @property
    def grid(self) -> tuple[int, int]:
        h, w = self.manifest["grid"]
        return int(h), int(w)

    @property
    def categories(self) -> list[Category]:
        return [Category(int(c["id"]), str(c["name"]), bool(c.get("novel", False)))
                for c in self.manifest["categories"]]

    @property
    def groundtruth_path(self) -> Path | None:
        gt = self.manifest.get("ground_truth")
        return None if gt is None else self.root / gt

    def _load(self, rel) -> np.ndarray:
        return tensorfile.load(self.root / rel)

    def text_embeddings(self) -> np.ndarray:
        text = self._load(self.manifest["text_embeddings"])
        if text.ndim != 2 or text.shape[0] != len(self.manifest["categories"]):
            raise InputError(f"{self.root}: text embeddings {text.shape} do not fit the category list")
        return text

    def _heads(self):
        heads = self.manifest.get("heads") or {}
        return {k: MlpParams.from_arrays([self._load(p) for p in v]) for k, v in heads.items()}

    def frames(self) -> Iterator[FrameInputs]:
        heads = self._heads()
        n, grid = self.num_queries, self.grid
        for i, fr in enumerate(self.manifest["frames"]):
            emb = self._load(fr["embeddings"])
            if emb.ndim != 2 or emb.shape[0] != n:
                raise InputError(f"{self.root}: frame {i} has {emb.shape} embeddings, expected {n} rows")
            if "masks" in fr:
                probs = self._load(fr["masks"])
            elif "pixel_features" in fr:
                probs = predict_masks(emb, self._load(fr["pixel_features"]))
            else:
                raise InputError(f"{self.root}: frame {i} needs 'masks' or 'pixel_features'")
            if probs.shape != (n, *grid):
                raise InputError(f"{self.root}: frame {i} masks {probs.shape}, expected {(n, *grid)}")

            if "obj_scores" in fr and "iou_scores" in fr:
                obj, iou = self._load(fr["obj_scores"]), self._load(fr["iou_scores"])
            elif "obj" in heads and "iou" in heads:
                obj, iou = predict_scores(emb, heads["obj"], heads["iou"])
            else:
                raise InputError(f"{self.root}: frame {i} has no scores and no score heads")
            clip = self._load(fr["clip_features"])
            yield FrameInputs(i, emb, MaskSet(probs, obj, iou), clip)
