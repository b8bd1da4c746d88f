"""LTLf to DFA by formula progression.

The formula is put in negation normal form and every subformula is
interned. After reading a letter, what remains to be satisfied by the rest
of the trace is a positive boolean combination of obligations

* ``strong(psi)``: the rest is non-empty and ``psi`` holds at its start,
* ``weak(psi)``: the rest is empty, or ``psi`` holds at its start,

kept in disjunctive normal form. Each DNF term is a state of a
nondeterministic tableau; a DNF (a set of terms) is a state of its subset
construction. A term accepts the end of the trace iff it holds no strong
obligation. The resulting DFA is minimized.

The initial state is kept apart from the progression states: it is the only
state reached by the empty trace, and it accepts iff the formula holds on
the empty trace under the usual convention (propositions, X, U and F are
false there; their duals true). This choice never affects non-empty traces.
"""
from __future__ import annotations

from collections import deque
from typing import Sequence

import numpy as np

from . import formula as f
from .dfa import Dfa, minimize
from .formula import Formula, check_props

DEFAULT_STATE_CAP = 10_000

Term = frozenset  # of atoms; atom = 2 * node_id + (0 strong | 1 weak)
Dnf = frozenset  # of terms


class StateBudgetExceeded(RuntimeError):
    pass


def nnf(phi: Formula, negate: bool = False) -> Formula:
    """Negation normal form: negations only in front of propositions."""
    k = phi.kind
    c = phi.children
    if k == f.NOT:
        return nnf(c[0], not negate)
    if k == f.TRUE:
        return f.Bottom if negate else f.Top
    if k == f.FALSE:
        return f.Top if negate else f.Bottom
    if k == f.PROP:
        return f.Not(phi) if negate else phi
    dual = {
        f.AND: f.OR, f.OR: f.AND, f.NEXT: f.WEAK_NEXT, f.WEAK_NEXT: f.NEXT,
        f.UNTIL: f.RELEASE, f.RELEASE: f.UNTIL, f.EVENTUALLY: f.GLOBALLY,
        f.GLOBALLY: f.EVENTUALLY,
    }
    kind = dual[k] if negate else k
    return Formula(kind, tuple(nnf(x, negate) for x in c))


def holds_on_empty(phi: Formula) -> bool:
    """Truth of an NNF formula on the empty trace."""
    k = phi.kind
    if k in (f.TRUE, f.NOT, f.WEAK_NEXT, f.RELEASE, f.GLOBALLY):
        return True
    if k in (f.FALSE, f.PROP, f.NEXT, f.UNTIL, f.EVENTUALLY):
        return False
    a, b = (holds_on_empty(c) for c in phi.children)
    return (a and b) if k == f.AND else (a or b)


def _absorb(terms) -> Dnf:
    """Drop terms implied by (i.e. supersets of) another term."""
    ordered = sorted(set(terms), key=len)
    kept: list[frozenset] = []
    for t in ordered:
        if not any(s <= t for s in kept):
            kept.append(t)
    return frozenset(kept)


class _Progressor:
    def __init__(self, phi: Formula, props: Sequence[str]):
        self.props = list(props)
        self.nodes: list[Formula] = []
        self.ids: dict[Formula, int] = {}
        self.root = self.intern(nnf(phi))
        self.memo: dict[tuple[int, int], Dnf] = {}
        self.true_id = self.intern(f.Top)
        self.false_id = self.intern(f.Bottom)

    def intern(self, node: Formula) -> int:
        if node in self.ids:
            return self.ids[node]
        for ch in node.children:
            self.intern(ch)
        self.ids[node] = len(self.nodes)
        self.nodes.append(node)
        return self.ids[node]

    def atom(self, node: Formula, weak: bool) -> Dnf:
        nid = self.ids[node]
        if weak and nid == self.true_id:
            return frozenset([frozenset()])
        if not weak and nid == self.false_id:
            return frozenset()
        return frozenset([frozenset([2 * nid + int(weak)])])

    @staticmethod
    def disj(a: Dnf, b: Dnf) -> Dnf:
        return _absorb(a | b)

    @staticmethod
    def conj(a: Dnf, b: Dnf) -> Dnf:
        return _absorb(_tidy(x | y) for x in a for y in b)

    def prog(self, nid: int, sym: int) -> Dnf:
        """Obligations on the rest of the trace for node ``nid`` at a position labelled ``sym``."""
        key = (nid, sym)
        if key in self.memo:
            return self.memo[key]
        node = self.nodes[nid]
        k = node.kind
        TRUE, FALSE = frozenset([frozenset()]), frozenset()
        if k == f.TRUE:
            out = TRUE
        elif k == f.FALSE:
            out = FALSE
        elif k == f.PROP:
            out = TRUE if node.name == self.props[sym] else FALSE
        elif k == f.NOT:  # literal, by NNF
            out = FALSE if node.children[0].name == self.props[sym] else TRUE
        elif k in (f.AND, f.OR):
            a = self.prog(self.ids[node.children[0]], sym)
            b = self.prog(self.ids[node.children[1]], sym)
            out = self.conj(a, b) if k == f.AND else self.disj(a, b)
        elif k == f.NEXT:
            out = self.atom(node.children[0], weak=False)
        elif k == f.WEAK_NEXT:
            out = self.atom(node.children[0], weak=True)
        elif k == f.UNTIL:
            a = self.prog(self.ids[node.children[0]], sym)
            b = self.prog(self.ids[node.children[1]], sym)
            out = self.disj(b, self.conj(a, self.atom(node, weak=False)))
        elif k == f.RELEASE:
            a = self.prog(self.ids[node.children[0]], sym)
            b = self.prog(self.ids[node.children[1]], sym)
            out = self.conj(b, self.disj(a, self.atom(node, weak=True)))
        elif k == f.EVENTUALLY:
            a = self.prog(self.ids[node.children[0]], sym)
            out = self.disj(a, self.atom(node, weak=False))
        elif k == f.GLOBALLY:
            a = self.prog(self.ids[node.children[0]], sym)
            out = self.conj(a, self.atom(node, weak=True))
        else:  # pragma: no cover - NNF leaves no other kinds
            raise AssertionError(k)
        self.memo[key] = out
        return out

    def step_term(self, term: Term, sym: int) -> Dnf:
        out: Dnf = frozenset([frozenset()])
        for a in term:
            out = self.conj(out, self.prog(a >> 1, sym))
            if not out:
                break
        return out

    def step(self, state: Dnf, sym: int) -> Dnf:
        out: set = set()
        for term in state:
            out |= self.step_term(term, sym)
        return _absorb(out)

    @staticmethod
    def term_accepts(term: Term) -> bool:
        return all(a & 1 for a in term)


def _tidy(term: frozenset) -> frozenset:
    """``strong(psi)`` implies ``weak(psi)``; keep only the strong one."""
    weak_redundant = {a for a in term if a & 1 and (a ^ 1) in term}
    return term - weak_redundant if weak_redundant else term


def compile_raw(phi: Formula, props: Sequence[str], state_cap: int = DEFAULT_STATE_CAP) -> Dfa:
    """Unminimized subset-construction DFA for ``phi`` over the simple alphabet ``props``."""
    props = list(props)
    if not props:
        raise ValueError("the alphabet must contain at least one proposition")
    check_props(phi, props)
    pg = _Progressor(phi, props)
    start: Dnf = frozenset([frozenset([2 * pg.root])])
    index: dict = {"init": 0}
    states: list = ["init"]
    rows: list[list[int]] = []
    queue: deque = deque(["init"])
    while queue:
        st = queue.popleft()
        row = []
        for s in range(len(props)):
            nxt = pg.step(start if st == "init" else st, s)
            if nxt not in index:
                if len(states) >= state_cap:
                    raise StateBudgetExceeded(
                        f"subset construction exceeded {state_cap} states for {phi}")
                index[nxt] = len(states)
                states.append(nxt)
                queue.append(nxt)
            row.append(index[nxt])
        rows.append(row)
    accepting = {i for i, st in enumerate(states[1:], start=1)
                 if any(pg.term_accepts(t) for t in st)}
    if holds_on_empty(pg.nodes[pg.root]):
        accepting.add(0)
    return Dfa(tuple(props), np.array(rows, dtype=np.int64), 0, frozenset(accepting))


def compile(phi: Formula, props: Sequence[str], state_cap: int = DEFAULT_STATE_CAP) -> Dfa:  # noqa: A001
    """Minimal complete DFA accepting exactly the non-empty simple traces that satisfy ``phi``."""
    return minimize(compile_raw(phi, props, state_cap))
