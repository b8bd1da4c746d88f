"""Complete deterministic automata over a simple alphabet, plus Hopcroft minimization."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class Dfa:
    alphabet: tuple[str, ...]
    delta: np.ndarray  # (n_states, n_symbols) int64, row = state
    initial: int
    accepting: frozenset[int]

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=np.int64)
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "accepting", frozenset(int(q) for q in self.accepting))
        if delta.ndim != 2 or delta.shape[1] != len(self.alphabet):
            raise ValueError(f"delta must be (n_states, {len(self.alphabet)}), got {delta.shape}")
        n = delta.shape[0]
        if n == 0:
            raise ValueError("a DFA needs at least one state")
        if delta.min() < 0 or delta.max() >= n:
            raise ValueError("delta is not total: successor index out of range")
        if not 0 <= self.initial < n:
            raise ValueError(f"initial state {self.initial} out of range")
        if any(not 0 <= q < n for q in self.accepting):
            raise ValueError("accepting set mentions unknown states")
        delta.setflags(write=False)
        object.__setattr__(self, "delta", delta)

    @property
    def n_states(self) -> int:
        return self.delta.shape[0]

    @property
    def n_symbols(self) -> int:
        return len(self.alphabet)

    def symbol_index(self, sym) -> int:
        if isinstance(sym, (int, np.integer)):
            if not 0 <= sym < self.n_symbols:
                raise ValueError(f"symbol index {sym} out of range")
            return int(sym)
        try:
            return self.alphabet.index(sym)
        except ValueError:
            raise ValueError(f"unknown symbol {sym!r}; alphabet is {self.alphabet}") from None

    def encode(self, trace: Sequence) -> list[int]:
        return [self.symbol_index(s) for s in trace]

    def run(self, trace: Sequence) -> list[int]:
        """State sequence ``q(0..T)`` including the initial state."""
        q = self.initial
        states = [q]
        for s in self.encode(trace):
            q = int(self.delta[q, s])
            states.append(q)
        return states

    def accepts(self, trace: Sequence) -> bool:
        return self.run(trace)[-1] in self.accepting

    def accepting_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_states, dtype=bool)
        mask[list(self.accepting)] = True
        return mask

    def reachable(self) -> list[int]:
        seen = {self.initial}
        order = [self.initial]
        queue = deque(order)
        while queue:
            q = queue.popleft()
            for s in range(self.n_symbols):
                r = int(self.delta[q, s])
                if r not in seen:
                    seen.add(r)
                    order.append(r)
                    queue.append(r)
        return order

    def to_json(self) -> dict:
        return {
            "alphabet": list(self.alphabet),
            "n_states": self.n_states,
            "initial": self.initial,
            "accepting": sorted(self.accepting),
            "delta": self.delta.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict | str) -> "Dfa":
        if isinstance(obj, str):
            obj = json.loads(obj)
        delta = np.asarray(obj["delta"], dtype=np.int64)
        if delta.shape[0] != obj["n_states"]:
            raise ValueError("n_states does not match delta rows")
        return cls(tuple(obj["alphabet"]), delta, int(obj["initial"]), frozenset(obj["accepting"]))

    def to_dot(self, state_labels: Sequence[str] | None = None) -> str:
        lines = ["digraph dfa {", "  rankdir=LR;", '  __start [shape=point];']
        for q in range(self.n_states):
            shape = "doublecircle" if q in self.accepting else "circle"
            label = str(q) if state_labels is None else f"{q}\\n{state_labels[q]}"
            lines.append(f'  q{q} [shape={shape}, label="{label}"];')
        lines.append(f"  __start -> q{self.initial};")
        for q in range(self.n_states):
            groups: dict[int, list[str]] = {}
            for s, sym in enumerate(self.alphabet):
                groups.setdefault(int(self.delta[q, s]), []).append(sym)
            for r, syms in groups.items():
                lines.append(f'  q{q} -> q{r} [label="{",".join(syms)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def refine_partition(delta: np.ndarray, labels: Sequence[int]) -> list[int]:
    """Hopcroft partition refinement.

    Returns a block id per state: two states share a block iff no input
    sequence separates them by ``labels`` of the reached states.
    """
    delta = np.asarray(delta)
    n, k = delta.shape
    inverse = [[[] for _ in range(n)] for _ in range(k)]
    for q in range(n):
        for s in range(k):
            inverse[s][int(delta[q, s])].append(q)

    groups: dict[int, set[int]] = {}
    for q, lab in enumerate(labels):
        groups.setdefault(lab, set()).add(q)
    blocks: list[set[int]] = list(groups.values())
    block_of = [0] * n
    for b, members in enumerate(blocks):
        for q in members:
            block_of[q] = b
    work = set(range(len(blocks)))
    while work:
        splitter = blocks[work.pop()].copy()
        for s in range(k):
            pre = {p for r in splitter for p in inverse[s][r]}
            touched: dict[int, set[int]] = {}
            for p in pre:
                touched.setdefault(block_of[p], set()).add(p)
            for b, inside in touched.items():
                if len(inside) == len(blocks[b]):
                    continue
                outside = blocks[b] - inside
                blocks[b] = inside
                nb = len(blocks)
                blocks.append(outside)
                for q in outside:
                    block_of[q] = nb
                if b in work:
                    work.add(nb)
                else:
                    work.add(b if len(inside) <= len(outside) else nb)
    return block_of


def quotient(delta: np.ndarray, initial: int, labels: Sequence[int]):
    """Minimize a labelled automaton restricted to states reachable from ``initial``.

    Returns ``(delta, label_per_state)`` renumbered in breadth-first order
    from the initial state, which becomes state 0.
    """
    delta = np.asarray(delta, dtype=np.int64)
    k = delta.shape[1]
    # restrict to reachable states
    seen = {initial: 0}
    order = [initial]
    queue = deque(order)
    while queue:
        q = queue.popleft()
        for s in range(k):
            r = int(delta[q, s])
            if r not in seen:
                seen[r] = len(order)
                order.append(r)
                queue.append(r)
    sub = np.array([[seen[int(delta[q, s])] for s in range(k)] for q in order], dtype=np.int64)
    sub_labels = [labels[q] for q in order]
    block_of = refine_partition(sub, sub_labels)
    # BFS renumbering of blocks
    new_id = {block_of[0]: 0}
    reps = [0]
    queue = deque([0])
    while queue:
        q = queue.popleft()
        for s in range(k):
            r = int(sub[q, s])
            b = block_of[r]
            if b not in new_id:
                new_id[b] = len(reps)
                reps.append(r)
                queue.append(r)
    out = np.array([[new_id[block_of[int(sub[q, s])]] for s in range(k)] for q in reps],
                   dtype=np.int64)
    return out, [sub_labels[q] for q in reps]


def minimize(d: Dfa) -> Dfa:
    """Language-equivalent DFA with the fewest states; state 0 is initial."""
    labels = [int(q in d.accepting) for q in range(d.n_states)]
    delta, labs = quotient(d.delta, d.initial, labels)
    return Dfa(d.alphabet, delta, 0, frozenset(q for q, a in enumerate(labs) if a))


def isomorphic(a: Dfa, b: Dfa) -> bool:
    """Structural identity after BFS renumbering from the initial states."""
    if a.alphabet != b.alphabet or a.n_states != b.n_states:
        return False
    mapping = {a.initial: b.initial}
    queue = deque([a.initial])
    while queue:
        q = queue.popleft()
        if (q in a.accepting) != (mapping[q] in b.accepting):
            return False
        for s in range(a.n_symbols):
            r, t = int(a.delta[q, s]), int(b.delta[mapping[q], s])
            if r in mapping:
                if mapping[r] != t:
                    return False
            else:
                mapping[r] = t
                queue.append(r)
    return len(set(mapping.values())) == len(mapping)
