"""CAPK binary tensor files.

Layout (all little-endian): magic "CAPK", version u32, ndim u32, dims as
u64 each, then the payload as row-major 32-bit floats.
"""

from __future__ import annotations

import struct

import numpy as np

from capkit.errors import DataError

MAGIC = b"CAPK"
VERSION = 1


def write_tensor(path, values: np.ndarray) -> None:
    arr = np.ascontiguousarray(values, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sII", MAGIC, VERSION, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.tobytes(order="C"))


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) != 12:
            raise DataError(f"{path}: truncated tensor header")
        magic, version, ndim = struct.unpack("<4sII", head)
        if magic != MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise DataError(f"{path}: unsupported version {version}")
        dims_raw = fh.read(8 * ndim)
        if len(dims_raw) != 8 * ndim:
            raise DataError(f"{path}: truncated dims")
        dims = struct.unpack(f"<{ndim}Q", dims_raw)
        count = int(np.prod(dims)) if ndim else 1
        payload = fh.read(4 * count)
        if len(payload) != 4 * count:
            raise DataError(f"{path}: truncated payload")
        if fh.read(1):
            raise DataError(f"{path}: trailing bytes after payload")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
