"""Dense array helpers with a fixed accumulation order.

Tensors are plain :class:`numpy.ndarray` objects (float32 by default,
float64 for gradient checks).  Products are accumulated one inner index at
a time so results never depend on the BLAS build or its thread count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ShapeError

NORM_EPS = 1e-12


def as_tensor(x, dtype=np.float32) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=dtype)
    if arr.size == 0 or any(d <= 0 for d in arr.shape):
        raise ShapeError(f"tensor dimensions must be positive, got {arr.shape}")
    return arr


def _result_dtype(*arrays: np.ndarray):
    dt = np.result_type(*arrays)
    return dt if dt in (np.float32, np.float64) else np.float64


_CHUNK_ELEMS = 1 << 22


def _sequential_sum(products: np.ndarray, axis: int) -> np.ndarray:
    # add.accumulate adds strictly left to right, unlike the pairwise add.reduce
    return np.take(np.add.accumulate(products, axis=axis), -1, axis=axis)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product ``a @ b`` accumulated in increasing inner-index order."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: {a.shape} x {b.shape}")
    dt = _result_dtype(a, b)
    a = a.astype(dt, copy=False)
    b = b.astype(dt, copy=False)
    m, k = a.shape
    n = b.shape[1]
    out = np.empty((m, n), dtype=dt)
    step = max(1, _CHUNK_ELEMS // max(1, m * k))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        out[:, lo:hi] = _sequential_sum(a[:, :, None] * b[None, :, lo:hi], axis=1)
    return out


def row_norms(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a = a.astype(_result_dtype(a), copy=False)
    return np.sqrt(_sequential_sum(a * a, axis=1))


def cosine_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity between the rows of ``a`` and ``b``.

    Rows whose norm is below 1e-12 get similarity 0 with everything.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ShapeError(f"cosine_rows needs matching feature dims, got {a.shape} and {b.shape}")
    dots = matmul(a, b.T)
    na = row_norms(a)
    nb = row_norms(b)
    denom = na[:, None] * nb[None, :]
    live = (na[:, None] >= NORM_EPS) & (nb[None, :] >= NORM_EPS)
    out = np.zeros_like(dots)
    np.divide(dots, denom, out=out, where=live)
    return np.clip(out, -1.0, 1.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    dt = _result_dtype(x)
    x = x.astype(dt, copy=False)
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax_rows(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    shifted = x - x.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=-1, keepdims=True)


def rectify(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


@dataclass(frozen=True)
class MlpParams:
    """Three fully connected layers; ``weights[i]`` has shape (in_i, out_i)."""

    weights: tuple[np.ndarray, np.ndarray, np.ndarray]
    biases: tuple[np.ndarray, np.ndarray, np.ndarray]

    def __post_init__(self):
        if len(self.weights) != 3 or len(self.biases) != 3:
            raise ShapeError("MlpParams needs exactly three layers")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeError(f"layer {i}: weight {w.shape} does not fit bias {b.shape}")
            if i > 0 and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ShapeError(
                    f"layer {i} input {w.shape[0]} != layer {i - 1} output {self.weights[i - 1].shape[1]}"
                )

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[2].shape[1]

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray]) -> "MlpParams":
        """Build from ``[w1, b1, w2, b2, w3, b3]``."""
        if len(arrays) != 6:
            raise ShapeError(f"expected 6 arrays, got {len(arrays)}")
        return cls(tuple(arrays[0::2]), tuple(arrays[1::2]))

    @classmethod
    def random(cls, sizes: Sequence[int], rng: np.random.Generator, scale: float = 0.1,
               dtype=np.float32) -> "MlpParams":
        if len(sizes) != 4:
            raise ShapeError("sizes must list input, two hidden, and output widths")
        ws = tuple((rng.standard_normal((sizes[i], sizes[i + 1])) * scale).astype(dtype) for i in range(3))
        bs = tuple((rng.standard_normal(sizes[i + 1]) * scale).astype(dtype) for i in range(3))
        return cls(ws, bs)


def mlp_forward(x: np.ndarray, params: MlpParams) -> np.ndarray:
    """FC -> rectify -> FC -> rectify -> FC.  The caller applies the output activation."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[1] != params.in_dim:
        raise ShapeError(f"input {x.shape} does not fit first layer width {params.in_dim}")
    h = x
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = matmul(h, w) + b
        if i < 2:
            h = rectify(h)
    return h
