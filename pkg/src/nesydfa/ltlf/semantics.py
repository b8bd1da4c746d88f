"""Direct finite-trace semantics, used as the oracle for the compiler."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import formula as f
from .formula import Formula


def truth_table(phi: Formula, trace: Sequence[str]) -> np.ndarray:
    """Boolean vector: entry ``i`` tells whether ``trace, i |= phi``.

    Traces are simple: each letter names the single true proposition.
    """
    n = len(trace)
    letters = np.array(trace, dtype=object)
    memo: dict[int, np.ndarray] = {}

    def ev(node: Formula) -> np.ndarray:
        key = id(node)
        if key in memo:
            return memo[key]
        k = node.kind
        if k == f.TRUE:
            out = np.ones(n, dtype=bool)
        elif k == f.FALSE:
            out = np.zeros(n, dtype=bool)
        elif k == f.PROP:
            out = letters == node.name
        elif k == f.NOT:
            out = ~ev(node.children[0])
        elif k == f.AND:
            out = ev(node.children[0]) & ev(node.children[1])
        elif k == f.OR:
            out = ev(node.children[0]) | ev(node.children[1])
        elif k in (f.NEXT, f.WEAK_NEXT):
            sub = ev(node.children[0])
            out = np.empty(n, dtype=bool)
            out[:-1] = sub[1:]
            out[-1] = k == f.WEAK_NEXT
        else:
            out = np.empty(n, dtype=bool)
            if k in (f.UNTIL, f.RELEASE):
                a, b = ev(node.children[0]), ev(node.children[1])
            else:
                a = b = ev(node.children[0])
            later = None
            for i in range(n - 1, -1, -1):
                if k == f.UNTIL:
                    v = b[i] or (later is not None and a[i] and later)
                elif k == f.RELEASE:
                    v = b[i] and (later is None or a[i] or later)
                elif k == f.EVENTUALLY:
                    v = b[i] or bool(later)
                else:  # GLOBALLY
                    v = b[i] and (later is None or later)
                out[i] = v
                later = bool(v)
        memo[key] = out
        return out

    return ev(phi)


def evaluate(phi: Formula, trace: Sequence[str]) -> bool:
    """True iff the non-empty simple ``trace`` satisfies ``phi`` at its first position."""
    if len(trace) == 0:
        raise ValueError("LTLf evaluation needs a non-empty trace")
    return bool(truth_table(phi, trace)[0])
