"""TNSR binary tensor files.

Layout (all integers little-endian)::

    offset  size      field
    0       4         magic b"TNSR"
    4       1         format version (1)
    5       1         dtype code: 1 = float32, 2 = float64
    6       1         rank r
    7       8*r       dims, u64 each
    7+8r    ...       payload, row-major, little-endian
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from ..errors import BundleIOError, InputError

MAGIC = b"TNSR"
VERSION = 1
DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
CODE_FOR = {np.dtype("float32"): 1, np.dtype("float64"): 2}


def to_bytes(arr) -> bytes:
    arr = np.asarray(arr)
    if arr.dtype not in CODE_FOR:
        raise InputError(f"unsupported dtype {arr.dtype}; use float32 or float64")
    if arr.ndim > 255 or arr.ndim == 0:
        raise InputError(f"rank must be 1..255, got {arr.ndim}")
    code = CODE_FOR[arr.dtype]
    header = MAGIC + struct.pack("<BBB", VERSION, code, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    return header + np.ascontiguousarray(arr, dtype=DTYPE_CODES[code]).tobytes()


def from_bytes(buf: bytes, name: str = "<bytes>") -> np.ndarray:
    if len(buf) < 7 or buf[:4] != MAGIC:
        raise InputError(f"{name}: not a TNSR file")
    version, code, rank = struct.unpack_from("<BBB", buf, 4)
    if version != VERSION:
        raise InputError(f"{name}: unsupported TNSR version {version}")
    if code not in DTYPE_CODES:
        raise InputError(f"{name}: unknown dtype code {code}")
    offset = 7 + 8 * rank
    if len(buf) < offset:
        raise InputError(f"{name}: truncated header")
    dims = struct.unpack_from(f"<{rank}Q", buf, 7)
    dt = DTYPE_CODES[code]
    expected = int(np.prod(dims, dtype=np.int64)) * dt.itemsize
    if len(buf) - offset != expected:
        raise InputError(f"{name}: payload has {len(buf) - offset} bytes, expected {expected}")
    arr = np.frombuffer(buf, dtype=dt, offset=offset).reshape(dims)
    return arr.astype(dt.newbyteorder("="))


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(path, arr) -> None:
    atomic_write_bytes(path, to_bytes(arr))


def load(path) -> np.ndarray:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise BundleIOError(f"cannot read tensor file {path}: {exc.strerror}") from exc
    return from_bytes(buf, str(path))
