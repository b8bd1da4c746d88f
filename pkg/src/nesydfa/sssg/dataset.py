"""Glyph-stream classification datasets built from a temporal formula.

Every symbolic training trace of length 1..5 is rendered once; the test
splits at longer lengths are balanced by sampling traces uniformly within
each class (exact counting on the compiled automaton). A glyph is a noisy
copy of the prototype vector of its symbol, or an image drawn from a pool.
"""
from __future__ import annotations

import itertools
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from ..ltlf import Dfa, compile as compile_ltlf, evaluate
from ..ltlf.formula import Formula
from ..ltlf.parser import parse, to_text

TRAIN = "train"


class DegenerateFormula(ValueError):
    """The formula accepts or rejects every trace of a required length."""


@dataclass(frozen=True)
class RenderConfig:
    feature_dim: int = 16
    noise: float = 0.25
    prototype_seed: int = 12345

    def prototypes(self, n_symbols: int) -> np.ndarray:
        rng = np.random.default_rng(self.prototype_seed)
        return rng.normal(0.0, 1.0, size=(n_symbols, self.feature_dim))


class Renderer(Protocol):
    feature_dim: int

    def render(self, traces: np.ndarray, rng: np.random.Generator, split: str) -> np.ndarray: ...


class GlyphRenderer:
    """Prototype plus isotropic Gaussian noise."""

    def __init__(self, config: RenderConfig, n_symbols: int):
        self.config = config
        self.feature_dim = config.feature_dim
        self.protos = config.prototypes(n_symbols)

    def render(self, traces: np.ndarray, rng: np.random.Generator, split: str) -> np.ndarray:
        base = self.protos[traces]
        return base + rng.normal(0.0, self.config.noise, size=base.shape)


@dataclass
class Split:
    name: str
    traces: list[np.ndarray]
    features: list[np.ndarray]
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.traces)

    def by_length(self) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """``(traces (N, L), features (N, L, F), labels (N,))`` per distinct length, ascending."""
        lengths = np.array([len(t) for t in self.traces])
        out = []
        for n in sorted(set(lengths.tolist())):
            idx = np.flatnonzero(lengths == n)
            out.append((np.stack([self.traces[i] for i in idx]),
                        np.stack([self.features[i] for i in idx]), self.labels[idx]))
        return out


@dataclass
class GlyphDataset:
    formula_id: str
    formula: str
    alphabet: tuple[str, ...]
    train: Split
    tests: dict[int, Split]
    render: dict = field(default_factory=dict)

    def splits(self) -> list[Split]:
        return [self.train] + [self.tests[k] for k in sorted(self.tests)]

    def formula_ast(self) -> Formula:
        return parse(self.formula, list(self.alphabet))


def accepting_counts(d: Dfa, length: int) -> np.ndarray:
    """``c[k, q]``: number of words of length ``k`` leading from ``q`` into an accepting state."""
    c = np.zeros((length + 1, d.n_states), dtype=object)
    c[0] = [1 if q in d.accepting else 0 for q in range(d.n_states)]
    for k in range(1, length + 1):
        c[k] = [sum(c[k - 1][d.delta[q, s]] for s in range(d.n_symbols)) for q in range(d.n_states)]
    return c


def sample_class(d: Dfa, length: int, accept: bool, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` traces of ``length`` drawn uniformly (with replacement) among accepted or rejected ones."""
    acc = accepting_counts(d, length)
    total = d.n_symbols ** np.arange(length + 1, dtype=object)
    counts = acc if accept else np.array([[total[k] - acc[k][q] for q in range(d.n_states)]
                                          for k in range(length + 1)], dtype=object)
    if counts[length][d.initial] == 0:
        raise DegenerateFormula(f"no {'accepted' if accept else 'rejected'} trace of length {length}")
    out = np.empty((n, length), dtype=np.int64)
    for i in range(n):
        q = d.initial
        for pos in range(length):
            rem = length - pos - 1
            weights = np.array([float(counts[rem][d.delta[q, s]]) for s in range(d.n_symbols)])
            s = int(rng.choice(d.n_symbols, p=weights / weights.sum()))
            out[i, pos] = s
            q = int(d.delta[q, s])
    return out


def synthesize_dataset(phi: Formula, props: Sequence[str], render: Renderer | RenderConfig | None = None,
                       seed: int = 0, formula_id: str = "formula", train_lengths: Sequence[int] = range(1, 6),
                       test_lengths: Sequence[int] = (10, 15), test_per_class: int = 500) -> GlyphDataset:
    props = tuple(props)
    if render is None:
        render = RenderConfig()
    renderer = GlyphRenderer(render, len(props)) if isinstance(render, RenderConfig) else render
    d = compile_ltlf(phi, props)
    train_stream, test_stream = np.random.SeedSequence(seed).spawn(2)
    rng_train, rng_test = np.random.default_rng(train_stream), np.random.default_rng(test_stream)

    for n in test_lengths:
        acc = accepting_counts(d, n)[n][d.initial]
        if acc == 0 or acc == len(props) ** n:
            raise DegenerateFormula(f"{formula_id}: every trace of length {n} gets the same label")

    traces, feats, labels = [], [], []
    for n in train_lengths:
        block = np.array(list(itertools.product(range(len(props)), repeat=n)), dtype=np.int64)
        rendered = renderer.render(block, rng_train, TRAIN)
        for tr, x in zip(block, rendered):
            traces.append(tr)
            feats.append(x)
            labels.append(evaluate(phi, [props[s] for s in tr]))
    train = Split(TRAIN, traces, feats, np.array(labels, dtype=np.int64))

    tests = {}
    for n in test_lengths:
        block = np.concatenate([sample_class(d, n, True, test_per_class, rng_test),
                                sample_class(d, n, False, test_per_class, rng_test)])
        rendered = renderer.render(block, rng_test, f"test{n}")
        lab = np.array([evaluate(phi, [props[s] for s in tr]) for tr in block], dtype=np.int64)
        tests[n] = Split(f"test{n}", list(block), list(rendered), lab)

    meta = asdict(render) if isinstance(render, RenderConfig) else {"source": type(renderer).__name__}
    return GlyphDataset(formula_id, to_text(phi), props, train, tests, meta)


# ---------------------------------------------------------------- binary cache

CACHE_MAGIC = b"GLYD"
CACHE_VERSION = 1


def save_dataset(ds: GlyphDataset, path: str | Path) -> None:
    """Header (magic, version, JSON metadata) then per split: name and per-sequence records.

    A record is ``u32 len | u8 label | i32 symbols[len] | f64 features[len * F]``.
    """
    meta = {"formula_id": ds.formula_id, "formula": ds.formula, "alphabet": list(ds.alphabet),
            "render": ds.render, "feature_dim": int(ds.train.features[0].shape[-1]),
            "splits": [s.name for s in ds.splits()], "test_lengths": sorted(ds.tests)}
    raw = json.dumps(meta, sort_keys=True).encode()
    chunks = [CACHE_MAGIC, struct.pack("<II", CACHE_VERSION, len(raw)), raw]
    for split in ds.splits():
        name = split.name.encode()
        chunks.append(struct.pack("<I", len(name)) + name + struct.pack("<I", len(split)))
        for tr, x, y in zip(split.traces, split.features, split.labels):
            chunks.append(struct.pack("<IB", len(tr), int(y)))
            chunks.append(np.asarray(tr, dtype="<i4").tobytes())
            chunks.append(np.asarray(x, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_dataset(path: str | Path) -> GlyphDataset:
    buf = Path(path).read_bytes()
    if buf[:4] != CACHE_MAGIC:
        raise ValueError(f"{path}: not a glyph dataset cache")
    version, meta_len = struct.unpack_from("<II", buf, 4)
    if version != CACHE_VERSION:
        raise ValueError(f"{path}: unsupported cache version {version}")
    pos = 12
    meta = json.loads(buf[pos:pos + meta_len])
    pos += meta_len
    fdim = meta["feature_dim"]
    splits = []
    for _ in meta["splits"]:
        (nlen,) = struct.unpack_from("<I", buf, pos)
        name = buf[pos + 4:pos + 4 + nlen].decode()
        pos += 4 + nlen
        (count,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        traces, feats, labels = [], [], []
        for _ in range(count):
            n, y = struct.unpack_from("<IB", buf, pos)
            pos += 5
            traces.append(np.frombuffer(buf, "<i4", n, pos).astype(np.int64))
            pos += 4 * n
            feats.append(np.frombuffer(buf, "<f8", n * fdim, pos).reshape(n, fdim).copy())
            pos += 8 * n * fdim
            labels.append(y)
        splits.append(Split(name, traces, feats, np.array(labels, dtype=np.int64)))
    if pos != len(buf):
        raise ValueError(f"{path}: trailing bytes in cache")
    tests = {n: s for n, s in zip(meta["test_lengths"], splits[1:])}
    return GlyphDataset(meta["formula_id"], meta["formula"], tuple(meta["alphabet"]), splits[0], tests,
                        meta["render"])
