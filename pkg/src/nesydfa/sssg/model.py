"""Grounder + frozen DeepDFA classifier trained on last-step labels."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import deepdfa as D
from .. import tensor as T
from ..automata import MooreMachine
from ..ltlf import compile as compile_ltlf
from ..tensor import Adam, Tensor
from ..tensor.nn import MLP
from .dataset import GlyphDataset, Split

BATCH_LIMIT = 4096
MINIBATCH = 64


class Grounder:
    """MLP with a softmax head mapping one glyph to a distribution over symbols.

    tanh hidden units keep the whole model smooth, so finite-difference
    checks of the composite graph are well defined everywhere.
    """

    def __init__(self, dims: Sequence[int], rng: np.random.Generator, activation: str = "tanh"):
        self.dims = list(dims)
        self.mlp = MLP(self.dims, rng, activation=activation, name="grounder")

    @classmethod
    def default(cls, feature_dim: int, n_symbols: int, rng: np.random.Generator) -> "Grounder":
        return cls([feature_dim, 64, 64, n_symbols], rng)

    def __call__(self, x: Tensor) -> Tensor:
        return T.softmax_t(self.mlp(x))

    def predict(self, x: np.ndarray) -> np.ndarray:
        z = self.mlp.forward_np(x)
        z = z - z.max(axis=-1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=-1, keepdims=True)

    def parameters(self) -> list[Tensor]:
        return self.mlp.parameters()


class SsgModel:
    """``o = O(G(d))``: grounder on every frame, then the injected automaton."""

    def __init__(self, grounder, dfa: D.DeepDfa):
        self.grounder = grounder
        self.dfa = dfa

    @classmethod
    def for_dataset(cls, ds: GlyphDataset, rng: np.random.Generator, hidden: Sequence[int] = (64, 64)
                    ) -> "SsgModel":
        d = compile_ltlf(ds.formula_ast(), ds.alphabet)
        fdim = ds.train.features[0].shape[-1]
        g = Grounder([fdim, *hidden, len(ds.alphabet)], rng)
        return cls(g, D.inject(MooreMachine.from_dfa(d)))

    def symbol_probs(self, feats: Tensor) -> Tensor:
        n, length, fdim = feats.shape
        flat = self.grounder(T.reshape(feats, (n * length, fdim)))
        return T.reshape(flat, (n, length, flat.shape[1]))

    def last_output(self, feats: np.ndarray) -> Tensor:
        """Output distribution (N, O) after the last frame of each sequence in (N, L, F)."""
        _, o = D.forward_batch(self.dfa, self.symbol_probs(Tensor(feats)))
        return o[:, o.shape[1] - 1]

    def predict(self, feats: np.ndarray) -> np.ndarray:
        return self.last_output(feats).data.argmax(axis=1)


@dataclass
class TrainConfig:
    lr: float = 3e-3
    epochs: int = 150
    batch: int | None = None  # None: whole dataset when it fits, else minibatches of 64


class NonFiniteLoss(FloatingPointError):
    pass


def _batches(split: Split, cfg: TrainConfig, rng: np.random.Generator):
    groups = split.by_length()
    total = len(split)
    size = cfg.batch or (total if total <= BATCH_LIMIT else MINIBATCH)
    if size >= total:
        yield [(x, y) for _, x, y in groups]
        return
    chunks = []
    for _, x, y in groups:
        order = rng.permutation(len(y))
        for i in range(0, len(y), size):
            idx = order[i:i + size]
            chunks.append([(x[idx], y[idx])])
    for k in rng.permutation(len(chunks)):
        yield chunks[k]


def train(model: SsgModel, data: GlyphDataset, cfg: TrainConfig = TrainConfig(), seed: int = 0,
          log_splits: Sequence[Split] = ()) -> list[dict]:
    """Adam on the mean last-step cross-entropy; only the grounder is updated.

    Returns one record per epoch (and per extra split in ``log_splits``) with
    loss, sequence accuracy and grounding accuracy.
    """
    rng = np.random.default_rng(seed)
    params = model.grounder.parameters()
    opt = Adam(params, lr=cfg.lr)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        for batch in _batches(data.train, cfg, rng):
            n_total = sum(len(y) for _, y in batch)
            loss = None
            for x, y in batch:
                part = T.scale(T.cross_entropy(model.last_output(x), y), len(y) / n_total)
                loss = part if loss is None else T.add(loss, part)
            if not math.isfinite(loss.item()):
                raise NonFiniteLoss(f"non-finite training loss at epoch {epoch}: {loss.item()}")
            opt.zero_grad()
            loss.backward()
            opt.step()
        for split in (data.train, *log_splits):
            rec = evaluate(model, split)
            history.append({"epoch": epoch, "split": split.name, **rec})
    return history


def _perm_accuracy(true: np.ndarray, pred: np.ndarray, n_symbols: int) -> float:
    if n_symbols > 8:
        return float(np.mean(true == pred))
    best = 0.0
    for perm in itertools.permutations(range(n_symbols)):
        best = max(best, float(np.mean(np.asarray(perm)[pred] == true)))
    return best


def evaluate(model: SsgModel, split: Split) -> dict:
    """Loss, sequence accuracy and grounding accuracy (raw and best over symbol permutations)."""
    n_symbols = model.dfa.n_symbols
    correct, total, nll = 0, 0, 0.0
    true_syms, pred_syms = [], []
    for traces, x, y in split.by_length():
        probs = model.last_output(x).data
        correct += int((probs.argmax(axis=1) == y).sum())
        nll -= float(np.log(np.maximum(probs[np.arange(len(y)), y], 1e-12)).sum())
        total += len(y)
        g = model.grounder.predict(x.reshape(-1, x.shape[-1])).argmax(axis=1)
        true_syms.append(traces.reshape(-1))
        pred_syms.append(g)
    ts, ps = np.concatenate(true_syms), np.concatenate(pred_syms)
    return {"loss": nll / total, "seq_acc": correct / total,
            "grounding_acc": float(np.mean(ts == ps)),
            "grounding_acc_perm": _perm_accuracy(ts, ps, n_symbols)}
