"""MNIST IDX ingestion as an optional glyph source."""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

IMAGES_MAGIC = 2051
LABELS_MAGIC = 2049


class SourceUnavailable(FileNotFoundError):
    pass


class IdxFormatError(ValueError):
    pass


def _read(path: str | Path) -> bytes:
    path = Path(path)
    if not path.exists():
        raise SourceUnavailable(f"source unavailable: {path} does not exist")
    return path.read_bytes()


def read_idx_images(path: str | Path) -> np.ndarray:
    buf = _read(path)
    if len(buf) < 16:
        raise IdxFormatError(f"{path}: truncated header")
    magic, n, rows, cols = struct.unpack_from(">IIII", buf, 0)
    if magic != IMAGES_MAGIC:
        raise IdxFormatError(f"{path}: bad magic {magic:#010x}, expected images ({IMAGES_MAGIC:#010x})")
    if len(buf) < 16 + n * rows * cols:
        raise IdxFormatError(f"{path}: truncated data ({len(buf) - 16} of {n * rows * cols} bytes)")
    return np.frombuffer(buf, np.uint8, n * rows * cols, 16).reshape(n, rows * cols)


def read_idx_labels(path: str | Path) -> np.ndarray:
    buf = _read(path)
    if len(buf) < 8:
        raise IdxFormatError(f"{path}: truncated header")
    magic, n = struct.unpack_from(">II", buf, 0)
    if magic != LABELS_MAGIC:
        raise IdxFormatError(f"{path}: bad magic {magic:#010x}, expected labels ({LABELS_MAGIC:#010x})")
    if len(buf) < 8 + n:
        raise IdxFormatError(f"{path}: truncated data")
    return np.frombuffer(buf, np.uint8, n, 8)


def load_mnist_idx(images_path: str | Path, labels_path: str | Path,
                   digits: Sequence[int] = (0, 1)) -> dict[int, np.ndarray]:
    """Per-digit pools of flattened images scaled to [0, 1]."""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if len(images) != len(labels):
        raise IdxFormatError("image and label files disagree on the number of items")
    return {d: images[labels == d].astype(np.float64) / 255.0 for d in digits}


class PoolRenderer:
    """Glyphs drawn from per-symbol pools; train and test use separate pools."""

    def __init__(self, train_pools: Sequence[np.ndarray], test_pools: Sequence[np.ndarray]):
        self.train_pools = [np.asarray(p) for p in train_pools]
        self.test_pools = [np.asarray(p) for p in test_pools]
        self.feature_dim = self.train_pools[0].shape[1]

    def render(self, traces: np.ndarray, rng: np.random.Generator, split: str) -> np.ndarray:
        pools = self.train_pools if split == "train" else self.test_pools
        out = np.empty(traces.shape + (self.feature_dim,))
        for s, pool in enumerate(pools):
            mask = traces == s
            out[mask] = pool[rng.integers(0, len(pool), size=int(mask.sum()))]
        return out


def mnist_renderer(root: str | Path, digits: Sequence[int] = (0, 1)) -> PoolRenderer:
    """Renderer over the standard file names in ``root``; raises :class:`SourceUnavailable` if absent."""
    root = Path(root)
    train = load_mnist_idx(root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte", digits)
    test = load_mnist_idx(root / "t10k-images-idx3-ubyte", root / "t10k-labels-idx1-ubyte", digits)
    return PoolRenderer([train[d] for d in digits], [test[d] for d in digits])
