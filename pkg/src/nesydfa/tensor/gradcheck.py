"""Finite-difference validation of analytic gradients."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .core import Tensor


def grad_check(f: Callable[[], Tensor], params: Sequence[Tensor], h: float = 1e-5) -> float:
    """Max over all coordinates of ``|analytic - central| / max(1, |analytic|)``.

    ``f`` must rebuild the graph from ``params`` on every call and return a
    scalar tensor.
    """
    for p in params:
        p.grad = None
    out = f()
    out.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f().item()
            flat[i] = orig - h
            fm = f().item()
            flat[i] = orig
            num = (fp - fm) / (2.0 * h)
            ai = a.reshape(-1)[i]
            worst = max(worst, abs(ai - num) / max(1.0, abs(ai)))
    for p in params:
        p.grad = None
    return worst
