"""Strategy ablation over a set of bundles."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass
from pathlib import Path

from ..errors import BundleIOError, InputError
from ..evaluator import evaluate, id_switches
from ..matcher import Strategy
from .bundle import MANIFEST, Bundle
from .formats import parse_groundtruth, merge_groundtruth, read_json
from .run import run_videos
from .tensorfile import atomic_write_bytes

# (T, K) rows reported for the top-K strategy in the original ablation table
TABLE_GRID = ((3, 1), (5, 1), (5, 3), (7, 1), (7, 3), (7, 5), (9, 1), (9, 3), (9, 5), (9, 7),
              (11, 3), (11, 5), (11, 7))
FULL_T = (3, 5, 7, 9, 11)
FULL_K = (1, 3, 5, 7)
COLUMNS = ("strategy", "T", "K", "AP", "AP_n", "id_switches", "runtime_ms")


def strategy_grid(name: str = "default") -> list[Strategy]:
    """``default`` mirrors the published table; ``full`` takes every K <= T of the grid."""
    base = [Strategy.adjacent(), Strategy.longterm()]
    if name == "default":
        return base + [Strategy.topk(t, k) for t, k in TABLE_GRID]
    if name == "full":
        return base + [Strategy.topk(t, k) for t in FULL_T for k in FULL_K if k <= t]
    raise InputError(f"unknown grid {name!r}; use 'default' or 'full'")


def discover_bundles(root) -> list[Bundle]:
    root = Path(root)
    if not root.is_dir():
        raise BundleIOError(f"bundle directory {root} does not exist")
    if (root / MANIFEST).exists():
        return [Bundle.open(root)]
    dirs = sorted(p.parent for p in root.glob(f"*/{MANIFEST}"))
    if not dirs:
        raise InputError(f"no bundles found under {root}")
    return [Bundle.open(d) for d in dirs]


@dataclass
class AblationRow:
    strategy: Strategy
    AP: float
    AP_n: float | None
    id_switches: int
    runtime_ms: float

    def as_record(self) -> dict:
        topk = self.strategy.kind == "topk"
        return {
            "strategy": self.strategy.kind,
            "T": self.strategy.T if topk else "",
            "K": self.strategy.K if topk else "",
            "AP": f"{self.AP:.6f}",
            "AP_n": "" if self.AP_n is None else f"{self.AP_n:.6f}",
            "id_switches": self.id_switches,
            "runtime_ms": f"{self.runtime_ms:.1f}",
        }


def ablate(bundles: list[Bundle], strategies: list[Strategy], workers: int = 1) -> list[AblationRow]:
    docs = []
    for b in bundles:
        if b.groundtruth_path is None:
            raise InputError(f"bundle {b.root} has no ground truth")
        docs.append(read_json(b.groundtruth_path))
    categories, gts = parse_groundtruth(merge_groundtruth(docs))

    rows = []
    for strat in strategies:
        t0 = time.perf_counter()
        runs = run_videos(bundles, strat, workers=workers)
        elapsed = (time.perf_counter() - t0) * 1000.0
        preds = [p for r in runs for p in r.predictions]
        res = evaluate(preds, gts, categories)
        rows.append(AblationRow(strat, res.AP, res.AP_n, id_switches(preds, gts), elapsed))
    return rows


def rows_to_csv(rows: list[AblationRow]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(r.as_record())
    return buf.getvalue()


def write_csv(rows: list[AblationRow], path) -> None:
    atomic_write_bytes(path, rows_to_csv(rows).encode())
