"""Adam optimizer (in-place updates on :class:`Tensor` data)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Tensor


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0


def adam_step(params: Sequence[Tensor], grads: Sequence[np.ndarray | None],
              state: AdamState, cfg: AdamConfig) -> AdamState:
    """Apply one bias-corrected Adam update to ``params`` in place.

    A ``None`` gradient is treated as zero. Non-finite gradients raise
    ``FloatingPointError`` before any parameter is touched.
    """
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    gs = []
    for p, g in zip(params, grads):
        g = np.zeros_like(p.data) if g is None else np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for parameter {p.name or '?'}")
        gs.append(g)
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    state.t += 1
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, gs, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= cfg.lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps)
    return state


class Adam:
    """Stateful wrapper: reads ``p.grad`` from each parameter."""

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.cfg = AdamConfig(lr, beta1, beta2, eps)
        self.state = AdamState()

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        adam_step(self.params, [p.grad for p in self.params], self.state, self.cfg)
