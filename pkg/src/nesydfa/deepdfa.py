"""DeepDFA: a differentiable probabilistic Moore machine.

Parameters are logits ``theta_mu`` (Q,), ``theta_trans`` (S, Q, Q) and
``theta_out`` (Q, O). In learnable mode they are activated by a tempered
softmax over the last axis. An injected machine stores its one-hot matrices
directly and skips the activation, so long runs stay exactly one-hot.

The belief recurrence over a trace of symbol distributions is

    q[0] = mu,   q[i] = sum_j sig[i, j] * (q[i-1] @ trans[j]),   o[i] = q[i] @ out

and a categorical trace is the special case of one-hot rows.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from . import tensor as T
from .automata import MooreMachine
from .tensor import Tensor
from .tensor.checkpoint import load as load_checkpoint
from .tensor.checkpoint import save as save_checkpoint

INJECTED = "injected"
LEARNABLE = "learnable"
ROW_TOL = 1e-6


@dataclass(eq=False)
class DeepDfa:
    theta_mu: Tensor
    theta_trans: Tensor
    theta_out: Tensor
    tau: float = 1.0
    mode: str = LEARNABLE
    frozen: bool = False
    soft_injection: bool = False  # study flag: run injected logits through the softmax anyway
    alphabet: tuple[str, ...] | None = None
    outputs: tuple[str, ...] | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.mode not in (INJECTED, LEARNABLE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"temperature must lie in (0, 1], got {self.tau}")
        q = self.theta_mu.shape[0]
        if self.theta_trans.ndim != 3 or self.theta_trans.shape[1:] != (q, q):
            raise ValueError(f"transition logits must be (S, {q}, {q}), got {self.theta_trans.shape}")
        if self.theta_out.ndim != 2 or self.theta_out.shape[0] != q:
            raise ValueError(f"output logits must be ({q}, O), got {self.theta_out.shape}")
        for t in self.parameters_all():
            t.requires_grad = not self.frozen

    @property
    def n_states(self) -> int:
        return self.theta_mu.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.theta_trans.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.theta_out.shape[1]

    def parameters_all(self) -> list[Tensor]:
        return [self.theta_mu, self.theta_trans, self.theta_out]

    def parameters(self) -> list[Tensor]:
        """Trainable tensors (empty when frozen)."""
        return [] if self.frozen else self.parameters_all()

    def activated(self) -> tuple[Tensor, Tensor, Tensor]:
        """``(mu, trans, out)`` as graph nodes."""
        if self.mode == INJECTED and not self.soft_injection:
            return self.theta_mu, self.theta_trans, self.theta_out
        return (T.softmax_t(self.theta_mu, self.tau), T.softmax_t(self.theta_trans, self.tau),
                T.softmax_t(self.theta_out, self.tau))

    def matrices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Activated ``(mu, trans, out)`` as plain arrays (cached for frozen machines)."""
        if self.frozen and "mats" in self._cache:
            return self._cache["mats"]
        mu, tr, out = (t.data for t in self.activated())
        mats = (mu.copy(), tr.copy(), out.copy())
        if self.frozen:
            self._cache["mats"] = mats
        return mats

    def checksum(self) -> str:
        h = hashlib.sha256()
        for t in self.parameters_all():
            h.update(np.ascontiguousarray(t.data).tobytes())
        return h.hexdigest()

    def sidecar(self) -> dict:
        obj = {"n_states": self.n_states, "n_symbols": self.n_symbols,
               "n_outputs": self.n_outputs, "tau": self.tau, "mode": self.mode}
        if self.alphabet is not None:
            obj["alphabet"] = list(self.alphabet)
        if self.outputs is not None:
            obj["outputs"] = list(self.outputs)
        return obj

    def save(self, path: str | Path) -> None:
        """Checkpoint at ``path`` plus a JSON sidecar at ``path + '.json'``."""
        path = Path(path)
        save_checkpoint(path, {"theta_mu": self.theta_mu, "theta_trans": self.theta_trans,
                               "theta_out": self.theta_out})
        Path(str(path) + ".json").write_text(json.dumps(self.sidecar(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path, frozen: bool | None = None) -> "DeepDfa":
        path = Path(path)
        meta = json.loads(Path(str(path) + ".json").read_text())
        arrays = load_checkpoint(path)
        out = cls(Tensor(arrays["theta_mu"]), Tensor(arrays["theta_trans"]), Tensor(arrays["theta_out"]),
                  tau=float(meta["tau"]), mode=meta["mode"],
                  frozen=(meta["mode"] == INJECTED) if frozen is None else frozen,
                  alphabet=tuple(meta["alphabet"]) if "alphabet" in meta else None,
                  outputs=tuple(meta["outputs"]) if "outputs" in meta else None)
        if (out.n_states, out.n_symbols, out.n_outputs) != (meta["n_states"], meta["n_symbols"],
                                                            meta["n_outputs"]):
            raise ValueError("checkpoint shapes disagree with the sidecar")
        return out


def inject(m: MooreMachine, tau: float = 1.0) -> DeepDfa:
    """Frozen DeepDFA whose matrices are the one-hot encoding of ``m``."""
    n, k, o = m.n_states, m.n_symbols, m.n_outputs
    mu = np.zeros(n)
    mu[m.initial] = 1.0
    trans = np.zeros((k, n, n))
    for q in range(n):
        trans[np.arange(k), q, m.delta[q]] = 1.0
    out = np.zeros((n, o))
    out[np.arange(n), m.output_of] = 1.0
    return DeepDfa(Tensor(mu), Tensor(trans), Tensor(out), tau=tau, mode=INJECTED, frozen=True,
                   alphabet=m.alphabet, outputs=m.outputs)


def learnable(n_states: int, n_symbols: int, n_outputs: int, rng: np.random.Generator,
              tau: float = 1.0, init_scale: float = 1.0) -> DeepDfa:
    """Randomly initialised trainable DeepDFA (logits ~ N(0, init_scale^2))."""
    return DeepDfa(Tensor(rng.normal(0.0, init_scale, n_states)),
                   Tensor(rng.normal(0.0, init_scale, (n_symbols, n_states, n_states))),
                   Tensor(rng.normal(0.0, init_scale, (n_states, n_outputs))),
                   tau=tau, mode=LEARNABLE, frozen=False)


# ---------------------------------------------------------------- belief recurrence

def belief(mu: Tensor, trans: Tensor, sig: Tensor) -> Tensor:
    """Fused belief recurrence: ``sig`` (N, L, S) -> beliefs (N, L+1, Q), one graph node."""
    q = _kernels.belief_forward(mu.data, trans.data, sig.data)

    def backward(g):
        dmu, dtrans, dsig = _kernels.belief_backward(trans.data, sig.data, q, g)
        if mu.requires_grad:
            mu._accumulate(dmu)
        if trans.requires_grad:
            trans._accumulate(dtrans)
        if sig.requires_grad:
            sig._accumulate(dsig)

    return T.core._result(q, (mu, trans, sig), backward)


def belief_composed(mu: Tensor, trans: Tensor, sig: Tensor) -> Tensor:
    """The same recurrence built from primitive tape ops (reference route for the fused op)."""
    n, length, k = sig.shape
    nq = mu.shape[0]
    q = T.add(T.Tensor(np.zeros((n, nq))), T.reshape(mu, (1, nq)))
    steps = [T.reshape(q, (n, 1, nq))]
    for i in range(length):
        nxt = None
        for j in range(k):
            term = T.mul(T.matmul(q, trans[j]), sig[:, i, j:j + 1])
            nxt = term if nxt is None else T.add(nxt, term)
        q = nxt
        steps.append(T.reshape(q, (n, 1, nq)))
    return T.concat(steps, axis=1)


def _outputs(q: Tensor, out: Tensor) -> Tensor:
    """``q[:, 1:] @ out`` for beliefs (N, L+1, Q) -> (N, L, O)."""
    n, l1, nq = q.shape
    flat = T.reshape(q[:, 1:], (n * (l1 - 1), nq))
    return T.reshape(T.matmul(flat, out), (n, l1 - 1, out.shape[1]))


def _check_rows(sig: np.ndarray, n_symbols: int) -> None:
    if sig.shape[-1] != n_symbols:
        raise ValueError(f"symbol distributions must have {n_symbols} entries, got {sig.shape[-1]}")
    if sig.size and (sig.min() < -ROW_TOL or np.abs(sig.sum(axis=-1) - 1.0).max() > ROW_TOL):
        raise ValueError("every symbol distribution must be non-negative and sum to 1")


def _one_hot(p: DeepDfa, traces: np.ndarray) -> np.ndarray:
    traces = np.asarray(traces, dtype=np.int64)
    if traces.size and (traces.min() < 0 or traces.max() >= p.n_symbols):
        raise ValueError(f"symbol index outside 0..{p.n_symbols - 1}")
    return np.eye(p.n_symbols)[traces]


def forward_batch(p: DeepDfa, sig: Tensor | np.ndarray, fused: bool = True) -> tuple[Tensor, Tensor]:
    """Beliefs (N, L+1, Q) and outputs (N, L, O) for a batch of probabilistic traces (N, L, S)."""
    sig = sig if isinstance(sig, Tensor) else Tensor(sig)
    if sig.ndim != 3:
        raise ValueError(f"batched traces must be (N, L, S), got {sig.shape}")
    _check_rows(sig.data, p.n_symbols)
    mu, trans, out = p.activated()
    q = (belief if fused else belief_composed)(mu, trans, sig)
    return q, _outputs(q, out)


def forward_probabilistic(p: DeepDfa, trace: Tensor | np.ndarray, fused: bool = True
                          ) -> tuple[Tensor, Tensor]:
    """Beliefs (T+1, Q) and outputs (T, O) for one trace of symbol distributions (T, S)."""
    trace = trace if isinstance(trace, Tensor) else Tensor(np.asarray(trace, dtype=np.float64))
    if trace.ndim != 2:
        raise ValueError(f"a probabilistic trace must be (T, S), got {trace.shape}")
    length = trace.shape[0]
    q, o = forward_batch(p, T.reshape(trace, (1, length, p.n_symbols)), fused)
    return q[0], o[0]


def forward_categorical(p: DeepDfa, trace: Sequence[int] | np.ndarray, fused: bool = True
                        ) -> tuple[Tensor, Tensor]:
    """Beliefs (T+1, Q) and outputs (T, O) for a trace of symbol indices."""
    trace = np.asarray(trace, dtype=np.int64).reshape(-1)
    return forward_probabilistic(p, _one_hot(p, trace), fused)


def _is_categorical(trace) -> bool:
    if isinstance(trace, Tensor):
        return False
    arr = np.asarray(trace)
    return arr.ndim == 1 and (arr.size == 0 or np.issubdtype(arr.dtype, np.integer))


def lifted_Q(p: DeepDfa, trace) -> Tensor:  # noqa: N802
    """Belief sequence (T+1, Q) for a categorical or probabilistic trace."""
    if _is_categorical(trace):
        return forward_categorical(p, trace)[0]
    return forward_probabilistic(p, trace)[0]


def lifted_O(p: DeepDfa, trace) -> Tensor:  # noqa: N802
    """Output sequence (T, O) for a categorical or probabilistic trace."""
    if _is_categorical(trace):
        return forward_categorical(p, trace)[1]
    return forward_probabilistic(p, trace)[1]


def belief_step(p: DeepDfa, q: np.ndarray, sig: np.ndarray) -> np.ndarray:
    """One no-grad step of the recurrence for a single belief ``q`` (Q,) and symbol distribution (S,)."""
    _, trans, _ = p.matrices()
    return sig @ np.einsum("q,sqr->sr", q, trans)


def symbolic_states(p: DeepDfa, traces: np.ndarray) -> np.ndarray:
    """Argmax state sequences of an injected machine on equal-length categorical traces (N, L)."""
    mu, trans, _ = p.matrices()
    delta = trans.argmax(axis=-1).T
    return _kernels.symbolic_runs(delta, int(mu.argmax()), np.atleast_2d(traces))


# ---------------------------------------------------------------- factorized grounding

def joint_matrix(group_sizes: Sequence[int], joint_map: Mapping[tuple, int], n_symbols: int,
                 feasible=None) -> np.ndarray:
    """0/1 matrix (prod(group_sizes), n_symbols) sending each feasible class tuple to its symbol.

    ``feasible`` defaults to every tuple of the cross product; a feasible tuple
    missing from ``joint_map`` is an error, an infeasible one contributes nothing.
    """
    tuples = list(itertools.product(*(range(k) for k in group_sizes)))
    allowed = set(tuples) if feasible is None else {tuple(t) for t in feasible}
    mat = np.zeros((len(tuples), n_symbols))
    for row, tup in enumerate(tuples):
        if tup not in allowed:
            continue
        if tup not in joint_map:
            raise KeyError(f"joint map does not cover feasible class tuple {tup}")
        s = int(joint_map[tup])
        if not 0 <= s < n_symbols:
            raise ValueError(f"joint map sends {tup} to invalid symbol {s}")
        mat[row, s] = 1.0
    return mat


def factorized_grounding(groups: Sequence[Tensor | np.ndarray], joint_map: Mapping[tuple, int],
                         n_symbols: int, feasible=None) -> Tensor:
    """Joint symbol distributions from per-group class distributions.

    Each group is (N, k_g) or (k_g,). The probability of a joint symbol is the
    product of its group class probabilities, summed over the tuples mapped to
    it, renormalized over the feasible support. Differentiable in the groups.
    """
    gs = [g if isinstance(g, Tensor) else Tensor(np.asarray(g, dtype=np.float64)) for g in groups]
    single = gs[0].ndim == 1
    gs = [T.reshape(g, (1, g.shape[0])) if g.ndim == 1 else g for g in gs]
    n = gs[0].shape[0]
    for g in gs:
        if g.shape[0] != n:
            raise ValueError("all groups must have the same batch size")
        _check_rows(g.data, g.shape[1])
    sizes = [g.shape[1] for g in gs]
    mat = joint_matrix(sizes, joint_map, n_symbols, feasible)
    prod = gs[0]
    width = sizes[0]
    for g, k in zip(gs[1:], sizes[1:]):
        prod = T.mul(T.reshape(prod, (n, width, 1)), T.reshape(g, (n, 1, k)))
        width *= k
        prod = T.reshape(prod, (n, width))
    joint = T.matmul(prod, Tensor(mat))
    mass = T.sum(joint, axis=1, keepdims=True)
    if np.any(mass.data <= 0):
        raise ValueError("group distributions put no mass on any feasible tuple")
    out = T.div(joint, mass)
    return out[0] if single else out
