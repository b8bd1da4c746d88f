"""Pure numpy implementations of the hot loops (always available)."""
from __future__ import annotations

import numpy as np


def belief_forward(mu: np.ndarray, trans: np.ndarray, sig: np.ndarray) -> np.ndarray:
    """Belief sequences for a batch of symbol-distribution traces.

    ``mu`` (Q,), ``trans`` (S, Q, Q), ``sig`` (N, L, S) -> ``q`` (N, L+1, Q) with
    ``q[:, i] = sum_j sig[:, i-1, j] * (q[:, i-1] @ trans[j])``.
    """
    n, length, _ = sig.shape
    out = np.empty((n, length + 1, mu.shape[0]))
    out[:, 0] = mu
    for i in range(length):
        succ = np.einsum("nq,sqr->nsr", out[:, i], trans)
        out[:, i + 1] = np.einsum("ns,nsr->nr", sig[:, i], succ)
    return out


def belief_backward(trans: np.ndarray, sig: np.ndarray, q: np.ndarray, gq: np.ndarray):
    """Gradients of a scalar loss given ``gq = dloss/dq`` for the output of :func:`belief_forward`.

    Returns ``(dmu, dtrans, dsig)``.
    """
    n, length, _ = sig.shape
    g = gq[:, length].copy()
    dtrans = np.zeros_like(trans)
    dsig = np.empty_like(sig)
    for i in range(length, 0, -1):
        prev = q[:, i - 1]
        w = sig[:, i - 1]
        succ = np.einsum("nq,sqr->nsr", prev, trans)
        dsig[:, i - 1] = np.einsum("nsr,nr->ns", succ, g)
        dtrans += np.einsum("ns,nq,nr->sqr", w, prev, g)
        g = gq[:, i - 1] + np.einsum("ns,sqr,nr->nq", w, trans, g)
    return g.sum(axis=0), dtrans, dsig


def symbolic_runs(delta: np.ndarray, initial: int, traces: np.ndarray) -> np.ndarray:
    """State sequences (N, L+1) of a DFA over a batch of equal-length symbol traces (N, L)."""
    n, length = traces.shape
    out = np.empty((n, length + 1), dtype=np.int64)
    out[:, 0] = initial
    for i in range(length):
        out[:, i + 1] = delta[out[:, i], traces[:, i]]
    return out
