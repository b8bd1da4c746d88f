"""Hot loops with a compiled implementation and a numpy fallback.

The compiled module is used when it was built and ``NESYDFA_PURE_PYTHON`` is
unset or ``0``; otherwise the numpy versions are used. ``BACKEND`` names the
active implementation.
"""
from __future__ import annotations

import os

import numpy as np

from . import _numpy

_compiled = None
if os.environ.get("NESYDFA_PURE_PYTHON", "0") in ("", "0"):
    try:
        from . import _belief as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "numpy"


def _impl(pure: bool | None):
    if pure or _compiled is None:
        return _numpy
    return _compiled


def belief_forward(mu, trans, sig, pure: bool | None = None) -> np.ndarray:
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    trans = np.ascontiguousarray(trans, dtype=np.float64)
    sig = np.ascontiguousarray(sig, dtype=np.float64)
    return _impl(pure).belief_forward(mu, trans, sig)


def belief_backward(trans, sig, q, gq, pure: bool | None = None):
    args = [np.ascontiguousarray(a, dtype=np.float64) for a in (trans, sig, q, gq)]
    return _impl(pure).belief_backward(*args)


def symbolic_runs(delta, initial: int, traces, pure: bool | None = None) -> np.ndarray:
    delta = np.ascontiguousarray(delta, dtype=np.int64)
    traces = np.ascontiguousarray(traces, dtype=np.int64)
    if traces.ndim != 2:
        raise ValueError("traces must be a (batch, length) array")
    if traces.size and (traces.min() < 0 or traces.max() >= delta.shape[1]):
        raise ValueError("trace mentions a symbol index outside the alphabet")
    return _impl(pure).symbolic_runs(delta, int(initial), traces)


__all__ = ["BACKEND", "belief_forward", "belief_backward", "symbolic_runs"]
