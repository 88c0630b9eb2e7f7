"""Cross-frame query association.

Each frame's decoder queries are matched to the identity slots held in a
:class:`MemoryBank`.  Three strategies are supported:

* ``adjacent`` -- match against the previous frame only;
* ``longterm`` -- match against the running mean of every stored frame;
* ``topk`` -- score every stored frame by its own optimal matching cost,
  average the cost maps of the ``K`` cheapest frames, and match on that mean.

``ids[n]`` is the slot assigned to current query ``n``; the permuted
embeddings satisfy ``permuted[ids[n]] == cur[n]``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import InputError, ShapeError
from .numerics import NORM_EPS, cosine_rows

TIGHT_TOL = 1e-9


# --------------------------------------------------------------------------
# Hungarian algorithm
# --------------------------------------------------------------------------

def _solve_potentials(cost: np.ndarray):
    """Shortest augmenting path Hungarian method with row/column potentials.

    Returns ``(row_to_col, u, v)`` with ``cost[i, j] - u[i] - v[j] >= 0``
    everywhere and ``== 0`` on the returned matching.
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    owner = np.zeros(n + 1, dtype=np.int64)  # owner[j]: 1-based row on column j
    way = np.zeros(n + 1, dtype=np.int64)
    c = np.zeros((n + 1, n + 1))
    c[1:, 1:] = cost
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = owner[j0]
            free = ~used
            free[0] = False
            cur = c[i0] - u[i0] - v
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            cand = np.where(free, minv, np.inf)
            j1 = int(np.argmin(cand))
            delta = cand[j1]
            u[owner[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    row_to_col = np.empty(n, dtype=np.int64)
    row_to_col[owner[1:] - 1] = np.arange(n)
    return row_to_col, u[1:], v[1:]


def _lexicographic_matching(tight: np.ndarray, start: np.ndarray) -> np.ndarray:
    """Lexicographically smallest perfect matching inside the boolean graph ``tight``.

    ``start`` must already be a perfect matching of ``tight``.
    """
    n = tight.shape[0]
    match = start.copy()
    owner = np.empty(n, dtype=np.int64)
    owner[match] = np.arange(n)
    adj = [np.flatnonzero(tight[i]) for i in range(n)]

    def augment(row: int, fixed: np.ndarray, seen: np.ndarray, target: int) -> bool:
        # find an alternating path that hands `row` a column and ends on `target`
        for col in adj[row]:
            if seen[col]:
                continue
            seen[col] = True
            if col == target:
                match[row] = col
                owner[col] = row
                return True
            nxt = owner[col]
            if fixed[nxt]:
                continue
            if augment(nxt, fixed, seen, target):
                match[row] = col
                owner[col] = row
                return True
        return False

    fixed = np.zeros(n, dtype=bool)
    for i in range(n):
        for j in adj[i]:
            if j == match[i]:
                break
            r = owner[j]
            if fixed[r]:
                continue
            old = match[i]
            saved_match, saved_owner = match.copy(), owner.copy()
            match[i] = j
            owner[j] = i
            fixed[i] = True
            seen = np.zeros(n, dtype=bool)
            seen[j] = True
            if augment(r, fixed, seen, old):
                break
            match[:], owner[:] = saved_match, saved_owner
            fixed[i] = False
        fixed[i] = True
    return match


def hungarian(cost) -> np.ndarray:
    """Minimum-cost perfect assignment of a square cost matrix.

    Among optimal permutations the lexicographically smallest ``ids`` is
    returned (costs within 1e-9 of the optimum count as ties).
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1] or cost.shape[0] == 0:
        raise InputError(f"hungarian needs a non-empty square matrix, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise InputError("cost matrix has non-finite entries")
    n = cost.shape[0]
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    ids, u, v = _solve_potentials(cost)
    scale = max(1.0, float(np.abs(cost).max()))
    tight = (cost - u[:, None] - v[None, :]) <= TIGHT_TOL * scale
    tight[np.arange(n), ids] = True
    return _lexicographic_matching(tight, ids)


def rectangular_assignment(cost) -> list[tuple[int, int]]:
    """Assign every column of an ``R x C`` cost (``C <= R``) to a distinct row.

    Dummy columns are dropped afterwards.  Their value is irrelevant since
    every row not matched to a real column takes exactly one of them; zero
    keeps the tie tolerance and float resolution tied to the real costs.
    """
    cost = np.asarray(cost, dtype=np.float64)
    rows, cols = cost.shape
    if cols > rows:
        raise InputError(f"{cols} columns cannot all be assigned to {rows} rows")
    padded = np.zeros((rows, rows))
    padded[:, :cols] = cost
    ids = hungarian(padded)
    return [(i, int(j)) for i, j in enumerate(ids) if j < cols]


def check_permutation(ids, n: int | None = None) -> np.ndarray:
    ids = np.asarray(ids)
    n = len(ids) if n is None else n
    if ids.ndim != 1 or len(ids) != n or not np.array_equal(np.sort(ids), np.arange(n)):
        raise InputError(f"not a permutation of 0..{n - 1}: {ids.tolist()}")
    return ids.astype(np.int64)


def inverse_permutation(ids) -> np.ndarray:
    inv = np.empty_like(ids)
    inv[ids] = np.arange(len(ids))
    return inv


# --------------------------------------------------------------------------
# Cost maps
# --------------------------------------------------------------------------

def cost_map(cur, past) -> np.ndarray:
    """``1 - cos`` between current queries (rows) and stored slots (columns), in float64."""
    cur = np.asarray(cur, dtype=np.float64)
    past = np.asarray(past, dtype=np.float64)
    if cur.shape != past.shape or cur.ndim != 2:
        raise ShapeError(f"cost_map needs equal N x d inputs, got {cur.shape} and {past.shape}")
    return 1.0 - cosine_rows(cur, past)


def cost_maps(cur, pasts: list) -> list[np.ndarray]:
    """``cost_map(cur, p)`` for every ``p`` in ``pasts``, computed in one product."""
    cur = np.asarray(cur, dtype=np.float64)
    n = cur.shape[0]
    for p in pasts:
        if np.shape(p) != cur.shape:
            raise ShapeError(f"stored frame {np.shape(p)} does not match current frame {cur.shape}")
    stacked = np.concatenate([np.asarray(p, dtype=np.float64) for p in pasts], axis=0)
    full = 1.0 - cosine_rows(cur, stacked)
    return [full[:, i * n:(i + 1) * n] for i in range(len(pasts))]


def frame_cost(cost, ids) -> float:
    cost = np.asarray(cost, dtype=np.float64)
    ids = check_permutation(ids, cost.shape[0])
    total = 0.0
    for n, j in enumerate(ids):
        total += cost[n, j]
    return total


# --------------------------------------------------------------------------
# Memory bank and strategies
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Strategy:
    kind: Literal["adjacent", "longterm", "topk"]
    T: int = 1
    K: int = 1

    def __post_init__(self):
        if self.kind not in ("adjacent", "longterm", "topk"):
            raise InputError(f"unknown strategy {self.kind!r}")
        if self.kind == "topk" and not (self.T >= 1 and 1 <= self.K <= self.T):
            raise InputError(f"top-K needs 1 <= K <= T, got T={self.T} K={self.K}")

    @classmethod
    def adjacent(cls) -> "Strategy":
        return cls("adjacent")

    @classmethod
    def longterm(cls) -> "Strategy":
        return cls("longterm")

    @classmethod
    def topk(cls, T: int = 9, K: int = 5) -> "Strategy":
        return cls("topk", T, K)

    @property
    def capacity(self) -> int:
        return self.T if self.kind == "topk" else 1

    @property
    def label(self) -> str:
        return f"topk(T={self.T},K={self.K})" if self.kind == "topk" else self.kind


@dataclass
class MemoryBank:
    """Permuted embeddings of recent frames, most recent first.

    ``running_sum``/``count`` accumulate the L2-normalised rows of every
    frame ever pushed; the long-term strategy matches against their ratio.
    Normalising first keeps that aggregate independent of per-row scale.
    """

    capacity: int
    entries: deque = field(default_factory=deque)
    running_sum: np.ndarray | None = None
    count: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def num_queries(self) -> int | None:
        return None if not self.entries else self.entries[0].shape[0]

    def push(self, permuted: np.ndarray) -> None:
        self.entries.appendleft(permuted)
        while len(self.entries) > self.capacity:
            self.entries.pop()
        p64 = permuted.astype(np.float64)
        norms = np.sqrt(np.sum(p64 * p64, axis=1, keepdims=True))
        p64 = np.divide(p64, norms, out=np.zeros_like(p64), where=norms >= NORM_EPS)
        self.running_sum = p64.copy() if self.running_sum is None else self.running_sum + p64
        self.count += 1

    def running_mean(self) -> np.ndarray:
        if self.count == 0:
            raise InputError("memory bank is empty")
        return self.running_sum / self.count


@dataclass
class TopKResult:
    ids: np.ndarray
    mean_cost: np.ndarray
    selected: list[int]          # bank indices (0 = most recent)
    frame_costs: list[float]


def match_topk(cur, bank: MemoryBank, K: int) -> TopKResult:
    """Match ``cur`` against the ``K`` best-explaining frames in ``bank``."""
    if len(bank) == 0:
        raise InputError("match_topk needs a non-empty memory bank")
    if K < 1:
        raise InputError(f"K must be >= 1, got {K}")
    k_eff = min(K, len(bank))
    maps = cost_maps(cur, list(bank.entries))
    costs = [frame_cost(m, hungarian(m)) for m in maps]
    # stable sort keeps the more recent frame first on equal cost
    order = sorted(range(len(maps)), key=lambda i: costs[i])
    selected = sorted(order[:k_eff])
    total = np.zeros_like(maps[0])
    for i in selected:
        total = total + maps[i]
    mean = total / k_eff
    return TopKResult(hungarian(mean), mean, selected, costs)


def step(cur, bank: MemoryBank, strategy: Strategy):
    """Associate one frame and update ``bank`` in place.

    Returns ``(ids, permuted, bank)``.
    """
    cur = np.asarray(cur)
    if cur.ndim != 2:
        raise ShapeError(f"query embeddings must be N x d, got {cur.shape}")
    n = cur.shape[0]
    if len(bank) == 0:
        ids = np.arange(n)
    else:
        if bank.num_queries != n or bank.entries[0].shape[1] != cur.shape[1]:
            raise InputError(
                f"query count changed mid-video: bank holds {bank.entries[0].shape}, frame has {cur.shape}"
            )
        if strategy.kind == "adjacent":
            ids = hungarian(cost_map(cur, bank.entries[0]))
        elif strategy.kind == "longterm":
            ids = hungarian(cost_map(cur, bank.running_mean()))
        else:
            ids = match_topk(cur, bank, strategy.K).ids
    permuted = cur[inverse_permutation(ids)]
    bank.push(permuted)
    return ids, permuted, bank


class QueryTracker:
    """Convenience wrapper holding one video's memory bank."""

    def __init__(self, strategy: Strategy):
        self.strategy = strategy
        self.bank = MemoryBank(strategy.capacity)

    def step(self, cur) -> tuple[np.ndarray, np.ndarray]:
        ids, permuted, _ = step(cur, self.bank, self.strategy)
        return ids, permuted


def track_sequence(frames, strategy: Strategy) -> list[np.ndarray]:
    tracker = QueryTracker(strategy)
    return [tracker.step(f)[0] for f in frames]
