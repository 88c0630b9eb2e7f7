"""JSON formats for predictions, ground truth and novel-category lists.

Masks are stored per frame as uncompressed run-length encodings
``{"size": [h, w], "counts": [...]}`` over the row-major flattened mask,
starting with a run of zeros; ``null`` marks an empty frame.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import BundleIOError, InputError
from ..evaluator import Category, GroundTruthInstance, VideoInstancePrediction
from .tensorfile import atomic_write_bytes

PRED_FORMAT = "ovvis-predictions"
GT_FORMAT = "ovvis-groundtruth"


def encode_mask(mask) -> dict | None:
    if mask is None:
        return None
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        return None
    flat = m.reshape(-1).astype(np.int8)
    edges = np.flatnonzero(np.diff(flat)) + 1
    bounds = np.concatenate([[0], edges, [flat.size]])
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts = [0] + counts
    return {"size": list(m.shape), "counts": counts}


def decode_mask(rle: dict | None) -> np.ndarray | None:
    if rle is None:
        return None
    try:
        h, w = rle["size"]
        counts = rle["counts"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed mask encoding: {rle!r}") from exc
    if sum(counts) != h * w:
        raise InputError(f"mask run lengths sum to {sum(counts)}, expected {h * w}")
    values = np.arange(len(counts)) % 2 == 1
    return np.repeat(values, counts).reshape(h, w)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_json(path, obj) -> None:
    atomic_write_bytes(path, (dumps(obj) + "\n").encode())


def read_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise BundleIOError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def _check_format(doc, expected: str, name) -> None:
    if not isinstance(doc, dict) or doc.get("format") != expected:
        raise InputError(f"{name}: expected a {expected!r} document")


# --- predictions ------------------------------------------------------------

def predictions_doc(videos: list[dict]) -> dict:
    return {"format": PRED_FORMAT, "version": 1, "videos": videos}


def video_predictions_entry(video: str, num_frames: int, size, strategy: str,
                            preds: list[VideoInstancePrediction]) -> dict:
    return {
        "video": video,
        "num_frames": num_frames,
        "size": list(size),
        "strategy": strategy,
        "predictions": [
            {
                "track_id": int(p.track_id),
                "category": int(p.category),
                "confidence": float(p.confidence),
                "masks": [encode_mask(m) for m in p.masks],
            }
            for p in preds
        ],
    }


def parse_predictions(doc, name="predictions") -> list[VideoInstancePrediction]:
    _check_format(doc, PRED_FORMAT, name)
    out = []
    try:
        for v in doc["videos"]:
            for p in v["predictions"]:
                masks = [decode_mask(m) for m in p["masks"]]
                if len(masks) != v["num_frames"]:
                    raise InputError(f"{name}: track {p['track_id']} has {len(masks)} frames")
                out.append(VideoInstancePrediction(
                    int(p["track_id"]), int(p["category"]), float(p["confidence"]), masks, v["video"]))
    except (KeyError, TypeError) as exc:
        raise InputError(f"{name}: missing or malformed field ({exc})") from exc
    return out


def load_predictions(path) -> list[VideoInstancePrediction]:
    return parse_predictions(read_json(path), str(path))


# --- ground truth -------------------------------------------------------------

def groundtruth_doc(categories: list[Category], videos: list[dict]) -> dict:
    return {
        "format": GT_FORMAT,
        "version": 1,
        "categories": [{"id": c.id, "name": c.name, "novel": c.novel} for c in categories],
        "videos": videos,
    }


def video_groundtruth_entry(video: str, num_frames: int, size, instances: list[GroundTruthInstance]) -> dict:
    return {
        "video": video,
        "num_frames": num_frames,
        "size": list(size),
        "instances": [
            {"id": g.instance_id, "category": g.category, "masks": [encode_mask(m) for m in g.masks]}
            for g in instances
        ],
    }


def parse_groundtruth(doc, name="ground truth") -> tuple[list[Category], list[GroundTruthInstance]]:
    _check_format(doc, GT_FORMAT, name)
    try:
        cats = [Category(int(c["id"]), str(c["name"]), bool(c.get("novel", False))) for c in doc["categories"]]
        gts = []
        for v in doc["videos"]:
            for g in v["instances"]:
                masks = [decode_mask(m) for m in g["masks"]]
                if len(masks) != v["num_frames"]:
                    raise InputError(f"{name}: instance {g['id']} has {len(masks)} frames")
                gts.append(GroundTruthInstance(int(g["id"]), int(g["category"]), masks, v["video"]))
    except (KeyError, TypeError) as exc:
        raise InputError(f"{name}: missing or malformed field ({exc})") from exc
    return cats, gts


def load_groundtruth(path):
    return parse_groundtruth(read_json(path), str(path))


def merge_groundtruth(docs: list[dict]) -> dict:
    """Combine per-bundle ground-truth documents that share one category list."""
    if not docs:
        raise InputError("nothing to merge")
    cats = docs[0]["categories"]
    for d in docs[1:]:
        if d["categories"] != cats:
            raise InputError("ground-truth documents declare different categories")
    return {"format": GT_FORMAT, "version": 1, "categories": cats,
            "videos": [v for d in docs for v in d["videos"]]}


def apply_novel_file(categories: list[Category], path) -> list[Category]:
    """Override novel flags from a JSON list (or ``{"novel": [...]}``) of ids or names."""
    doc = read_json(path)
    items = doc.get("novel") if isinstance(doc, dict) else doc
    if not isinstance(items, list):
        raise InputError(f"{path}: expected a list of novel category ids or names")
    wanted = {str(x) for x in items}
    return [Category(c.id, c.name, str(c.id) in wanted or c.name in wanted) for c in categories]
