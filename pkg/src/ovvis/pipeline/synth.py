"""Seeded synthetic video bundles for exercising the association strategies.

Every query slot owns an anchor embedding (unit vector, pairwise cosine
below 0.3).  The first ``num_instances`` slots are visible instances drawn
as moving rectangles on the mask grid; the rest are background queries with
empty masks.  Per-frame embeddings are ``anchor + noise`` where the noise
has expected norm ``noise``.

Scenario kinds:

``stable``
    nothing happens.
``disappear_reappear``
    ``disappear_count`` instances vanish for ``window`` frames; their
    queries emit fresh random embeddings and empty masks meanwhile.
``occlusion_swap``
    instance 1 slides over instance 0 for ``window`` frames, its visible
    region shrinks and both embeddings blend toward each other, then the
    two separate again.
``noisy_frame``
    for ``window`` frames every embedding is swamped by noise of norm
    ``corrupt_scale`` while masks stay intact.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import GenerationError
from ..evaluator import Category, GroundTruthInstance
from . import tensorfile
from .bundle import BUNDLE_FORMAT, MANIFEST
from .formats import groundtruth_doc, video_groundtruth_entry, write_json

KINDS = ("stable", "disappear_reappear", "occlusion_swap", "noisy_frame")
MAX_COSINE = 0.3
PROB_ON, PROB_OFF = 0.95, 0.02


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = "stable"
    num_queries: int = 8
    num_instances: int | None = None
    frames: int = 15
    embed_dim: int = 256
    clip_dim: int = 64
    grid: tuple[int, int] = (64, 64)
    noise: float = 0.0
    window: int = 2
    window_start: int | None = None
    disappear_count: int = 2
    blend: float = 0.4
    corrupt_scale: float = 1.5
    shuffle: bool = False
    seed: int = 0
    name: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GenerationError(f"unknown scenario kind {self.kind!r}; choose from {KINDS}")
        if self.num_queries < 1 or self.frames < 1 or self.embed_dim < 1 or self.clip_dim < 1:
            raise GenerationError("sizes must be positive")
        if self.instances > self.num_queries or self.instances < 1:
            raise GenerationError("need 1 <= num_instances <= num_queries")
        if self.noise < 0 or self.window < 0:
            raise GenerationError("noise and window must be nonnegative")
        if self.kind != "stable" and self.window + 2 > self.frames:
            raise GenerationError(f"window {self.window} does not fit in {self.frames} frames")
        if self.kind == "occlusion_swap" and self.instances < 2:
            raise GenerationError("occlusion_swap needs two instances")

    @property
    def instances(self) -> int:
        return self.num_queries if self.num_instances is None else self.num_instances

    @property
    def video(self) -> str:
        return self.name or f"{self.kind}_s{self.seed}"


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def sample_anchors(n: int, dim: int, rng: np.random.Generator, max_tries: int = 2000) -> np.ndarray:
    """Unit vectors with pairwise cosine below 0.3, by rejection sampling."""
    anchors: list[np.ndarray] = []
    for i in range(n):
        for _ in range(max_tries):
            cand = _unit(rng.standard_normal(dim))
            if all(float(cand @ a) < MAX_COSINE for a in anchors):
                anchors.append(cand)
                break
        else:
            raise GenerationError(f"could not place anchor {i + 1} of {n} in dimension {dim}")
    return np.stack(anchors)


@dataclass
class _Box:
    y: float
    x: float
    h: int
    w: int
    vy: float
    vx: float

    def advance(self, grid) -> None:
        gh, gw = grid
        for pos, vel, size, limit in (("y", "vy", self.h, gh), ("x", "vx", self.w, gw)):
            p = getattr(self, pos) + getattr(self, vel)
            if p < 0 or p + size > limit:
                setattr(self, vel, -getattr(self, vel))
                p = min(max(p, 0), limit - size)
            setattr(self, pos, p)

    def mask(self, grid, dy: float = 0.0, dx: float = 0.0) -> np.ndarray:
        m = np.zeros(grid, dtype=bool)
        y0 = int(round(min(max(self.y + dy, 0), grid[0] - self.h)))
        x0 = int(round(min(max(self.x + dx, 0), grid[1] - self.w)))
        m[y0:y0 + self.h, x0:x0 + self.w] = True
        return m


@dataclass
class SyntheticVideo:
    spec: ScenarioSpec
    embeddings: list[np.ndarray]          # per frame, N x E (query order as emitted)
    masks: list[np.ndarray]               # per frame, N x h x w probabilities
    obj_scores: list[np.ndarray]
    iou_scores: list[np.ndarray]
    clip_features: list[np.ndarray]       # per frame, D x h x w
    text: np.ndarray                      # L x D
    gt_masks: list[list]                  # per instance, per frame bool mask or None
    query_order: list[np.ndarray] = field(default_factory=list)  # row r of frame t is slot query_order[t][r]

    @property
    def categories(self) -> list[Category]:
        return [Category(i, f"category_{i}", novel=i % 2 == 1) for i in range(self.spec.instances)]

    def groundtruth(self) -> list[GroundTruthInstance]:
        return [GroundTruthInstance(i, i, m, self.spec.video) for i, m in enumerate(self.gt_masks)]


def _window(spec: ScenarioSpec, rng: np.random.Generator) -> range:
    if spec.kind == "stable":
        return range(0)
    if spec.window_start is not None:
        start = spec.window_start
        if start < 1 or start + spec.window > spec.frames - 1:
            raise GenerationError(f"window start {start} leaves no frame before or after the window")
    else:
        hi = spec.frames - spec.window - 1
        start = int(rng.integers(min(6, hi), hi + 1))
    return range(start, start + spec.window)


def simulate(spec: ScenarioSpec) -> SyntheticVideo:
    rng = np.random.default_rng(spec.seed)
    n, m, e = spec.num_queries, spec.instances, spec.embed_dim
    grid = tuple(spec.grid)
    sigma = spec.noise / np.sqrt(e)

    anchors = sample_anchors(n, e, rng)
    proj = rng.standard_normal((spec.clip_dim, e)) / np.sqrt(e)
    text = np.stack([_unit(proj @ anchors[i]) for i in range(m)])

    boxes = []
    for _ in range(m):
        h, w = (int(v) for v in rng.integers(10, 21, size=2))
        boxes.append(_Box(float(rng.integers(0, grid[0] - h + 1)), float(rng.integers(0, grid[1] - w + 1)),
                          h, w, float(rng.uniform(-1.5, 1.5)), float(rng.uniform(-1.5, 1.5))))

    window = _window(spec, rng)
    vanished = set()
    if spec.kind == "disappear_reappear":
        count = min(spec.disappear_count, m)
        vanished = {int(i) for i in rng.choice(m, size=count, replace=False)}

    video = SyntheticVideo(spec, [], [], [], [], [], text.astype(np.float32), [[] for _ in range(m)])
    for t in range(spec.frames):
        emb = anchors + sigma * rng.standard_normal((n, e))
        frame_masks = [None] * n

        for i in range(m):
            if t in window and i in vanished:
                emb[i] = _unit(rng.standard_normal(e)) + sigma * rng.standard_normal(e)
                continue
            frame_masks[i] = boxes[i].mask(grid)

        if spec.kind == "occlusion_swap" and t in window:
            front = boxes[0]
            back_mask = boxes[1].mask(grid, front.y - boxes[1].y + front.h / 2, front.x - boxes[1].x + front.w / 2)
            back_mask &= ~frame_masks[0]
            frame_masks[1] = back_mask if back_mask.any() else None
            a, b = emb[0].copy(), emb[1].copy()
            emb[0] = (1 - spec.blend) * a + spec.blend * b
            emb[1] = spec.blend * a + (1 - spec.blend) * b
        if spec.kind == "noisy_frame" and t in window:
            emb = emb + (spec.corrupt_scale / np.sqrt(e)) * rng.standard_normal((n, e))

        probs = np.full((n, *grid), PROB_OFF)
        obj_p = rng.uniform(0.02, 0.1, size=n)
        iou = rng.uniform(0.0, 0.1, size=n)
        live_obj = rng.uniform(0.85, 0.98, size=n)
        live_iou = rng.uniform(0.7, 0.95, size=n)
        clip = np.zeros((spec.clip_dim, *grid))
        for i in range(m):
            msk = frame_masks[i]
            video.gt_masks[i].append(msk)
            if msk is None:
                continue
            probs[i][msk] = PROB_ON
            obj_p[i], iou[i] = live_obj[i], live_iou[i]
            rows = np.flatnonzero(msk.any(axis=1))
            cols = np.flatnonzero(msk.any(axis=0))
            box = (slice(rows[0], rows[-1] + 1), slice(cols[0], cols[-1] + 1))
            clip[(slice(None),) + box] += text[i][:, None, None] * msk[box][None]
        obj = np.stack([obj_p, 1.0 - obj_p], axis=1)

        order = rng.permutation(n) if spec.shuffle else np.arange(n)
        video.query_order.append(order)
        video.embeddings.append(emb[order].astype(np.float32))
        video.masks.append(probs[order].astype(np.float32))
        video.obj_scores.append(obj[order].astype(np.float32))
        video.iou_scores.append(iou[order, None].astype(np.float32))
        video.clip_features.append(clip.astype(np.float32))

        for box in boxes:
            box.advance(grid)
    return video


def write_bundle(video: SyntheticVideo, out) -> Path:
    out = Path(out)
    spec = video.spec
    frames = []
    for t in range(spec.frames):
        d = f"frames/{t:04d}"
        for key, arr in (("embeddings", video.embeddings[t]), ("masks", video.masks[t]),
                         ("obj_scores", video.obj_scores[t]), ("iou_scores", video.iou_scores[t]),
                         ("clip_features", video.clip_features[t])):
            tensorfile.save(out / d / f"{key}.tnsr", arr)
        frames.append({k: f"{d}/{k}.tnsr" for k in
                       ("embeddings", "masks", "obj_scores", "iou_scores", "clip_features")})
    tensorfile.save(out / "text.tnsr", video.text)
    cats = video.categories
    gt = groundtruth_doc(cats, [video_groundtruth_entry(spec.video, spec.frames, spec.grid, video.groundtruth())])
    write_json(out / "gt.json", gt)
    scenario = asdict(spec)
    scenario["grid"] = list(spec.grid)
    write_json(out / "scenario.json", scenario)
    manifest = {
        "format": BUNDLE_FORMAT,
        "version": 1,
        "video": spec.video,
        "num_queries": spec.num_queries,
        "grid": list(spec.grid),
        "categories": [{"id": c.id, "name": c.name, "novel": c.novel} for c in cats],
        "text_embeddings": "text.tnsr",
        "ground_truth": "gt.json",
        "frames": frames,
    }
    write_json(out / MANIFEST, manifest)
    return out


def synth_generate(spec: ScenarioSpec, out) -> Path:
    """Simulate ``spec`` and write it as a bundle directory at ``out``."""
    return write_bundle(simulate(spec), out)
