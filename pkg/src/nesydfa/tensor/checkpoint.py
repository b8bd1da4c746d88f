"""Flat binary parameter checkpoints.

Layout (little-endian)::

    b"TWCK" | u32 version | u32 count
    repeated count times:
        u32 name_len | name (utf-8) | u32 rank | u64 dims[rank] | f64 data[prod(dims)]
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import Tensor

MAGIC = b"TWCK"
VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(tensors: Mapping[str, Tensor | np.ndarray]) -> bytes:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, t in tensors.items():
        arr = np.asarray(t.data if isinstance(t, Tensor) else t, dtype="<f8")
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(arr.tobytes())
    return b"".join(chunks)


def loads(buf: bytes) -> dict[str, np.ndarray]:
    if buf[:4] != MAGIC:
        raise CheckpointError("bad checkpoint magic")
    off = 4
    try:
        version, count = struct.unpack_from("<II", buf, off)
        off += 8
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        out: dict[str, np.ndarray] = {}
        for _ in range(count):
            (n,) = struct.unpack_from("<I", buf, off)
            off += 4
            name = buf[off:off + n].decode("utf-8")
            off += n
            (rank,) = struct.unpack_from("<I", buf, off)
            off += 4
            dims = struct.unpack_from(f"<{rank}Q", buf, off)
            off += 8 * rank
            size = int(np.prod(dims, dtype=np.int64))
            if off + 8 * size > len(buf):
                raise CheckpointError(f"truncated data for tensor {name!r}")
            out[name] = np.frombuffer(buf, dtype="<f8", count=size, offset=off).reshape(dims).copy()
            off += 8 * size
    except struct.error as exc:
        raise CheckpointError("truncated checkpoint") from exc
    return out


def save(path: str | Path, tensors: Mapping[str, Tensor | np.ndarray]) -> None:
    Path(path).write_bytes(dumps(tensors))


def load(path: str | Path) -> dict[str, np.ndarray]:
    return loads(Path(path).read_bytes())
