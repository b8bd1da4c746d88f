"""Moore machines, probabilistic automata and reward labelling of task automata."""
from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ltlf.dfa import Dfa

SPARSE = "sparse"
DENSE = "dense"
SPARSE_OUTPUTS = ("win", "fail", "neutral")
CLASSIFIER_OUTPUTS = ("reject", "accept")


@dataclass(frozen=True, eq=False)
class MooreMachine:
    alphabet: tuple[str, ...]
    delta: np.ndarray  # (n_states, n_symbols)
    initial: int
    outputs: tuple[str, ...]
    output_of: np.ndarray  # (n_states,) index into outputs
    accepting: frozenset[int] = frozenset()

    def __post_init__(self):
        dfa = Dfa(self.alphabet, self.delta, self.initial, self.accepting)  # validates delta
        lam = np.asarray(self.output_of, dtype=np.int64)
        object.__setattr__(self, "alphabet", dfa.alphabet)
        object.__setattr__(self, "delta", dfa.delta)
        object.__setattr__(self, "accepting", dfa.accepting)
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if lam.shape != (dfa.n_states,):
            raise ValueError("output map must give one output per state")
        if lam.min() < 0 or lam.max() >= len(self.outputs):
            raise ValueError("output map mentions unknown output classes")
        lam.setflags(write=False)
        object.__setattr__(self, "output_of", lam)

    @property
    def n_states(self) -> int:
        return self.delta.shape[0]

    @property
    def n_symbols(self) -> int:
        return len(self.alphabet)

    @property
    def n_outputs(self) -> int:
        return len(self.outputs)

    def as_dfa(self) -> Dfa:
        return Dfa(self.alphabet, self.delta, self.initial, self.accepting)

    @classmethod
    def from_dfa(cls, d: Dfa) -> "MooreMachine":
        """Binary classifier machine: output 1 (``accept``) iff the state is accepting."""
        lam = d.accepting_mask().astype(np.int64)
        return cls(d.alphabet, d.delta, d.initial, CLASSIFIER_OUTPUTS, lam, d.accepting)

    def to_json(self, potentials: Sequence[float] | None = None) -> dict:
        obj = self.as_dfa().to_json()
        obj["outputs"] = list(self.outputs)
        obj["lambda"] = self.output_of.tolist()
        if potentials is not None:
            obj["potentials"] = [float(x) for x in potentials]
        return obj

    @classmethod
    def from_json(cls, obj: dict | str) -> "MooreMachine":
        if isinstance(obj, str):
            obj = json.loads(obj)
        d = Dfa.from_json(obj)
        return cls(d.alphabet, d.delta, d.initial, tuple(obj["outputs"]),
                   np.asarray(obj["lambda"]), d.accepting)

    def to_dot(self) -> str:
        return self.as_dfa().to_dot([self.outputs[o] for o in self.output_of])


def run(m: MooreMachine | Dfa, trace: Sequence) -> tuple[list[int], list[int]]:
    """States ``q(0..T)`` (``q(0)`` initial) and outputs ``o(1..T)`` with ``o(i) = lambda(q(i))``."""
    d = m.as_dfa() if isinstance(m, MooreMachine) else m
    states = d.run(trace)
    lam = m.output_of if isinstance(m, MooreMachine) else d.accepting_mask().astype(np.int64)
    return states, [int(lam[q]) for q in states[1:]]


@dataclass(frozen=True, eq=False)
class Pfa:
    alphabet: tuple[str, ...]
    mu: np.ndarray  # (n_states,)
    trans: np.ndarray  # (n_symbols, n_states, n_states)
    rho: np.ndarray  # (n_states,)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        trans = np.asarray(self.trans, dtype=np.float64)
        rho = np.asarray(self.rho, dtype=np.float64)
        n = mu.shape[0]
        if trans.shape != (len(self.alphabet), n, n):
            raise ValueError(f"transition tensor must be {(len(self.alphabet), n, n)}, got {trans.shape}")
        if rho.shape != (n,):
            raise ValueError("acceptance vector has the wrong length")
        if np.any(mu < 0) or abs(mu.sum() - 1.0) > 1e-9:
            raise ValueError("initial distribution is not on the simplex")
        if np.any(trans < 0) or np.any(np.abs(trans.sum(axis=-1) - 1.0) > 1e-9):
            raise ValueError("transition rows must be distributions")
        if np.any(rho < 0) or np.any(rho > 1):
            raise ValueError("acceptance probabilities must lie in [0, 1]")
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "trans", trans)
        object.__setattr__(self, "rho", rho)

    @property
    def n_states(self) -> int:
        return self.mu.shape[0]

    @classmethod
    def from_dfa(cls, d: Dfa) -> "Pfa":
        n, k = d.n_states, d.n_symbols
        mu = np.zeros(n)
        mu[d.initial] = 1.0
        trans = np.zeros((k, n, n))
        for q in range(n):
            for s in range(k):
                trans[s, q, d.delta[q, s]] = 1.0
        return cls(d.alphabet, mu, trans, d.accepting_mask().astype(np.float64))

    def _encode(self, trace: Sequence) -> list[int]:
        out = []
        for s in trace:
            if isinstance(s, (int, np.integer)):
                out.append(int(s))
            else:
                out.append(self.alphabet.index(s))
        return out


def acceptance_probability(p: Pfa, trace: Sequence) -> float:
    """``mu . T[s1] . ... . T[sT] . rho`` for a non-empty categorical trace."""
    q = p.mu
    for s in p._encode(trace):
        q = q @ p.trans[s]
    return float(q @ p.rho)


def path_sum_probability(p: Pfa, trace: Sequence) -> float:
    """Acceptance probability by summing over every state path (exponential; test oracle)."""
    syms = p._encode(trace)
    n = p.n_states
    total = 0.0
    for path in itertools.product(range(n), repeat=len(syms) + 1):
        w = p.mu[path[0]]
        for i, s in enumerate(syms):
            w *= p.trans[s, path[i], path[i + 1]]
            if w == 0.0:
                break
        total += w * p.rho[path[-1]]
    return total


def distance_to_accepting(d: Dfa) -> np.ndarray:
    """BFS edge distance from each state to the nearest accepting state (-1 if unreachable)."""
    n = d.n_states
    preds: list[list[int]] = [[] for _ in range(n)]
    for q in range(n):
        for s in range(d.n_symbols):
            preds[int(d.delta[q, s])].append(q)
    dist = np.full(n, -1, dtype=np.int64)
    queue = deque()
    for q in sorted(d.accepting):
        dist[q] = 0
        queue.append(q)
    while queue:
        r = queue.popleft()
        for q in preds[r]:
            if dist[q] < 0:
                dist[q] = dist[r] + 1
                queue.append(q)
    return dist


def failure_states(d: Dfa) -> frozenset[int]:
    """States from which no accepting state is reachable."""
    return frozenset(int(q) for q in np.flatnonzero(distance_to_accepting(d) < 0))


@dataclass(frozen=True, eq=False)
class RewardLabeling:
    scheme: str
    scale: float
    output_of: np.ndarray  # per-state output class
    potentials: np.ndarray | None  # per-state potential (dense only)
    step_reward: np.ndarray  # (n_states, n_states): reward for moving q -> q'
    failure: frozenset[int] = field(default_factory=frozenset)
    accepting: frozenset[int] = field(default_factory=frozenset)

    def reward(self, q: int, q_next: int) -> float:
        return float(self.step_reward[q, q_next])

    def is_terminal(self, q: int) -> bool:
        return q in self.accepting or q in self.failure


def label_rewards(d: Dfa, scheme: str = DENSE, scale: float = 100.0
                  ) -> tuple[MooreMachine, RewardLabeling]:
    """Turn a task DFA into a reward machine.

    ``sparse``: outputs win/fail/neutral, ``+scale`` on entering an accepting
    state, ``-scale`` on entering a failure state, 0 otherwise.

    ``dense``: potential ``scale * max(0, 1 - dist(q) / dist(q0))`` for states
    that can still accept, ``-scale`` for failure states; outputs are the
    distinct potential levels (ascending). The step reward is the potential
    difference, except that entering a failure state costs exactly ``-scale``.
    """
    if scale <= 0:
        raise ValueError("reward scale must be positive")
    dist = distance_to_accepting(d)
    fail = frozenset(int(q) for q in np.flatnonzero(dist < 0))
    if d.initial in fail:
        raise ValueError("the task is unsatisfiable: the initial state is a failure state")
    n = d.n_states
    acc = d.accepting
    entering_fail = np.zeros((n, n), dtype=bool)
    for q in range(n):
        for r in fail:
            entering_fail[q, r] = q not in fail

    if scheme == SPARSE:
        lam = np.array([0 if q in acc else 1 if q in fail else 2 for q in range(n)], dtype=np.int64)
        step = np.zeros((n, n))
        for q in range(n):
            for r in range(n):
                if r in acc and q not in acc:
                    step[q, r] = scale
                elif entering_fail[q, r]:
                    step[q, r] = -scale
        machine = MooreMachine(d.alphabet, d.delta, d.initial, SPARSE_OUTPUTS, lam, acc)
        return machine, RewardLabeling(SPARSE, scale, lam, None, step, fail, acc)

    if scheme != DENSE:
        raise ValueError(f"unknown reward scheme {scheme!r}")
    d0 = int(dist[d.initial])
    if d0 == 0:
        d0 = max(1, int(dist.max()))
    phi = np.where(dist < 0, -scale, scale * np.maximum(0.0, 1.0 - dist / d0))
    levels = sorted(set(phi.tolist()))
    lam = np.array([levels.index(v) for v in phi.tolist()], dtype=np.int64)
    names = tuple("fail" if v == -scale and fail else f"phi={v:g}" for v in levels)
    step = phi[None, :] - phi[:, None]
    step[entering_fail] = -scale
    for q in fail:
        step[q, list(fail)] = 0.0
    machine = MooreMachine(d.alphabet, d.delta, d.initial, names, lam, acc)
    return machine, RewardLabeling(DENSE, scale, lam, phi, step, fail, acc)


def separating_trace(a: Dfa, b: Dfa, max_len: int) -> tuple[int, ...] | None:
    """Shortest non-empty trace of length ``<= max_len`` on which ``a`` and ``b`` disagree.

    Exploring the product automaton breadth-first decides every trace up to
    ``max_len`` exactly, without enumerating them one by one.
    """
    if a.alphabet != b.alphabet:
        raise ValueError(f"alphabet mismatch: {a.alphabet} vs {b.alphabet}")
    start = (a.initial, b.initial)
    parent: dict[tuple[int, int], tuple[tuple[int, int], int] | None] = {start: None}
    frontier = [start]
    for _ in range(max_len):
        nxt = []
        for pq in frontier:
            for s in range(a.n_symbols):
                r = (int(a.delta[pq[0], s]), int(b.delta[pq[1], s]))
                if (r[0] in a.accepting) != (r[1] in b.accepting):
                    path = [s]
                    cur = pq
                    while parent[cur] is not None:
                        cur, sym = parent[cur]
                        path.append(sym)
                    return tuple(reversed(path))
                if r not in parent:
                    parent[r] = (pq, s)
                    nxt.append(r)
        frontier = nxt
        if not frontier:
            break
    return None


def equivalent(a: Dfa, b: Dfa, max_len: int) -> bool:
    """True iff ``a`` and ``b`` agree on every trace of length 1..max_len."""
    return separating_trace(a, b, max_len) is None


def equivalent_bruteforce(a: Dfa, b: Dfa, max_len: int) -> bool:
    """Same as :func:`equivalent` by explicit enumeration (exponential; test oracle)."""
    if a.alphabet != b.alphabet:
        raise ValueError("alphabet mismatch")
    for n in range(1, max_len + 1):
        for tr in itertools.product(range(a.n_symbols), repeat=n):
            if a.accepts(tr) != b.accepts(tr):
                return False
    return True
