import itertools

import numpy as np
import pytest

from nesydfa import deepdfa as D
from nesydfa import tensor as T
from nesydfa.automata import MooreMachine, Pfa, acceptance_probability, label_rewards, run
from nesydfa.ltlf import Dfa
from nesydfa.rl.tasks import task_dfa, task_ids
from nesydfa.tensor import Tensor, grad_check

from conftest import random_dfa


def _three_state_dfa():
    # a moves 0 -> 1 -> 2, b resets to 0, 2 is an accepting sink
    delta = np.array([[1, 0], [2, 0], [2, 2]])
    return Dfa(("a", "b"), delta, 0, frozenset({2}))


def _random_moore(rng, n_states, n_symbols, n_outputs):
    delta = rng.integers(0, n_states, size=(n_states, n_symbols))
    lam = rng.integers(0, n_outputs, size=n_states)
    return MooreMachine(tuple(f"s{i}" for i in range(n_symbols)), delta, 0,
                        tuple(f"o{i}" for i in range(n_outputs)), lam)


# ------------------------------------------------------------------ injection

def test_inject_matrix_form():
    d = _three_state_dfa()
    p = D.inject(MooreMachine.from_dfa(d))
    mu, trans, out = p.matrices()
    assert mu.tolist() == [1.0, 0.0, 0.0]
    for s in range(2):
        for q in range(3):
            assert trans[s, q].tolist() == np.eye(3)[d.delta[q, s]].tolist()
    assert out.tolist() == [[1, 0], [1, 0], [0, 1]]
    assert p.frozen and p.mode == D.INJECTED and p.parameters() == []


def test_inject_single_state():
    d = Dfa(("a", "b"), np.array([[0, 0]]), 0, frozenset({0}))
    mu, trans, out = D.inject(MooreMachine.from_dfa(d)).matrices()
    assert mu.tolist() == [1.0] and trans.tolist() == [[[1.0]], [[1.0]]] and out.tolist() == [[0.0, 1.0]]


@pytest.mark.parametrize("seed", range(4))
def test_injection_tracks_symbolic_run(seed):
    rng = np.random.default_rng(seed)
    m = _random_moore(rng, int(rng.integers(1, 11)), int(rng.integers(1, 6)), 3)
    p = D.inject(m)
    for _ in range(100):
        trace = rng.integers(0, m.n_symbols, size=int(rng.integers(0, 51)))
        q, o = D.forward_categorical(p, trace)
        states, outs = run(m, trace.tolist())
        assert np.array_equal(q.data, np.eye(m.n_states)[states])
        assert q.data.argmax(axis=1).tolist() == states
        assert o.data.argmax(axis=1).tolist() == outs


def test_soft_injection_blurs():
    m = MooreMachine.from_dfa(_three_state_dfa())
    p = D.inject(m)
    p.soft_injection = True
    q, _ = D.forward_categorical(p, [0, 0, 1, 0])
    assert q.data.max() < 1.0


def test_symbolic_states_matches_run():
    d = task_dfa("visit_pg_seq_gd_avoid")
    p = D.inject(MooreMachine.from_dfa(d))
    traces = np.random.default_rng(0).integers(0, 5, size=(20, 30))
    got = D.symbolic_states(p, traces)
    for tr, row in zip(traces, got):
        assert row.tolist() == d.run(tr.tolist())


# ------------------------------------------------------------------ forward passes

def test_empty_trace():
    p = D.inject(MooreMachine.from_dfa(_three_state_dfa()))
    q, o = D.forward_categorical(p, [])
    assert q.shape == (1, 3) and o.shape == (0, 2)
    assert q.data[0].tolist() == [1.0, 0.0, 0.0]


def test_invalid_symbol():
    p = D.inject(MooreMachine.from_dfa(_three_state_dfa()))
    with pytest.raises(ValueError):
        D.forward_categorical(p, [0, 2])


def test_hand_pfa_matches_acceptance_probability():
    mu = np.array([0.6, 0.4, 0.0])
    trans = np.array([
        [[0.2, 0.8, 0.0], [0.0, 0.5, 0.5], [0.0, 0.0, 1.0]],
        [[1.0, 0.0, 0.0], [0.3, 0.0, 0.7], [0.1, 0.1, 0.8]],
    ])
    rho = np.array([0.0, 0.0, 1.0])
    out = np.stack([1 - rho, rho], axis=1)
    p = D.DeepDfa(Tensor(mu), Tensor(trans), Tensor(out), mode=D.INJECTED, frozen=True)
    q, o = D.forward_categorical(p, [0, 1])
    expected = acceptance_probability(Pfa(("a", "b"), mu, trans, rho), "ab")
    assert abs(o.data[-1, 1] - expected) < 1e-12
    assert np.allclose(q.data[2], mu @ trans[0] @ trans[1], atol=1e-12, rtol=0)


def test_one_hot_probabilistic_is_bit_identical():
    rng = np.random.default_rng(5)
    p = D.learnable(5, 3, 2, rng)
    trace = rng.integers(0, 3, size=12)
    qc, oc = D.forward_categorical(p, trace)
    qp, op = D.forward_probabilistic(p, np.eye(3)[trace])
    assert np.array_equal(qc.data, qp.data) and np.array_equal(oc.data, op.data)


def test_uniform_symbols_average_successors():
    d = Dfa(("a", "b"), np.array([[0, 1], [1, 1]]), 0, frozenset({1}))
    p = D.inject(MooreMachine.from_dfa(d))
    q, _ = D.forward_probabilistic(p, [[0.5, 0.5]])
    assert q.data[1].tolist() == [0.5, 0.5]


def _expectation_oracle(p, sig):
    mu, trans, _ = p.matrices()
    total = np.zeros(p.n_states)
    for tr in itertools.product(range(sig.shape[1]), repeat=sig.shape[0]):
        w = np.prod([sig[i, s] for i, s in enumerate(tr)])
        q = mu
        for s in tr:
            q = q @ trans[s]
        total += w * q
    return total


@pytest.mark.parametrize("seed", range(10))
def test_probabilistic_forward_is_an_expectation(seed):
    rng = np.random.default_rng(seed)
    m = _random_moore(rng, int(rng.integers(2, 7)), 3, 2)
    p = D.inject(m) if seed % 2 == 0 else D.learnable(m.n_states, 3, 2, rng, tau=0.5)
    sig = rng.dirichlet(np.ones(3), size=5)
    q, _ = D.forward_probabilistic(p, sig)
    assert np.abs(q.data[-1] - _expectation_oracle(p, sig)).max() < 1e-9


def test_rows_remain_distributions():
    rng = np.random.default_rng(9)
    for tau in (1.0, 0.5, 0.1):
        p = D.learnable(6, 4, 3, rng, tau=tau, init_scale=3.0)
        q, o = D.forward_probabilistic(p, rng.dirichlet(np.ones(4), size=30))
        assert np.abs(q.data.sum(axis=1) - 1).max() < 1e-9
        assert np.abs(o.data.sum(axis=1) - 1).max() < 1e-9


def test_bad_probabilistic_rows():
    p = D.learnable(2, 2, 2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        D.forward_probabilistic(p, [[0.5, 0.4]])
    with pytest.raises(ValueError):
        D.forward_probabilistic(p, [[0.2, 0.3, 0.5]])


def test_lifted_functions():
    m, _ = label_rewards(task_dfa("minecraft"), "dense")
    p = D.inject(m)
    seq = [m.alphabet.index(s) for s in "PGD"]
    o = D.lifted_O(p, seq)
    assert m.outputs[int(o.data[-1].argmax())] == "phi=100"
    assert D.lifted_Q(p, seq).shape == (4, m.n_states)
    assert D.lifted_Q(p, np.eye(5)[seq]).shape == (4, m.n_states)


def test_lifted_O_gradient():
    rng = np.random.default_rng(1)
    p = D.learnable(4, 3, 2, rng, tau=0.7)
    sig = rng.dirichlet(np.ones(3), size=6)
    y = np.array([1])
    err = grad_check(lambda: T.cross_entropy(D.lifted_O(p, sig)[5:6], y), p.parameters())
    assert err < 1e-5


def test_fused_and_composed_routes_agree():
    rng = np.random.default_rng(2)
    p = D.learnable(5, 3, 2, rng)
    z = Tensor(rng.normal(size=(4, 6, 3)), requires_grad=True)
    w = Tensor(rng.normal(size=(4, 6, 2)))
    grads = []
    for fused in (True, False):
        for t in p.parameters() + [z]:
            t.zero_grad()
        _, o = D.forward_batch(p, T.softmax_t(z), fused=fused)
        loss = T.sum(T.mul(o, w))
        loss.backward()
        grads.append([t.grad.copy() for t in p.parameters() + [z]] + [loss.item()])
    for a, b in zip(*grads):
        assert np.allclose(a, b, atol=1e-12, rtol=1e-10)


def test_fused_op_grad_check_on_inputs():
    rng = np.random.default_rng(3)
    p = D.inject(MooreMachine.from_dfa(random_dfa(rng, 6, ["a", "b", "c"])))
    z = Tensor(rng.normal(size=(3, 5, 3)), requires_grad=True)
    w = Tensor(rng.normal(size=(3, 5, 2)))
    assert grad_check(lambda: T.sum(T.mul(D.forward_batch(p, T.softmax_t(z))[1], w)), [z]) < 1e-6


# ------------------------------------------------------------------ persistence

def test_save_and_load(tmp_path):
    m, _ = label_rewards(task_dfa("visit_pg"), "dense")
    p = D.inject(m)
    p.save(tmp_path / "dfa.twck")
    back = D.DeepDfa.load(tmp_path / "dfa.twck")
    assert back.checksum() == p.checksum()
    assert back.frozen and back.mode == D.INJECTED and back.outputs == m.outputs
    meta = (tmp_path / "dfa.twck.json").read_text()
    for key in ("n_states", "n_symbols", "n_outputs", "tau", "mode"):
        assert key in meta


@pytest.mark.parametrize("task", task_ids())
def test_every_task_injects(task):
    m = MooreMachine.from_dfa(task_dfa(task))
    p = D.inject(m)
    assert p.n_states == m.n_states <= 16


# ------------------------------------------------------------------ factorized grounding

def test_factorized_one_hot():
    jm = {(i, j): 2 * i + j for i in range(2) for j in range(2)}
    got = D.factorized_grounding([np.array([0.0, 1.0]), np.array([1.0, 0.0])], jm, 4)
    assert got.data.tolist() == [0.0, 0.0, 1.0, 0.0]


def test_factorized_uniform():
    jm = {(i, j): 2 * i + j for i in range(2) for j in range(2)}
    got = D.factorized_grounding([np.full(2, 0.5), np.full(2, 0.5)], jm, 4)
    assert got.data.tolist() == [0.25] * 4


def test_factorized_caviar_shape():
    rng = np.random.default_rng(0)
    jm = {t: i for i, t in enumerate(itertools.product(range(4), range(4), range(2)))}
    groups = [rng.dirichlet(np.ones(k), size=7) for k in (4, 4, 2)]
    got = D.factorized_grounding(groups, jm, 32)
    assert got.shape == (7, 32)
    assert np.abs(got.data.sum(axis=1) - 1).max() < 1e-12
    expected = np.einsum("ni,nj,nk->nijk", *groups).reshape(7, 32)
    assert np.abs(got.data - expected).max() < 1e-12


def test_factorized_renormalizes_feasible_support():
    feasible = [(0, 0), (1, 1)]
    jm = {(0, 0): 0, (1, 1): 1}
    got = D.factorized_grounding([np.array([0.5, 0.5]), np.array([0.25, 0.75])], jm, 2, feasible)
    assert np.allclose(got.data, [0.125 / 0.5, 0.375 / 0.5])
    with pytest.raises(KeyError):
        D.factorized_grounding([np.array([0.5, 0.5]), np.array([0.5, 0.5])], jm, 2)


def test_factorized_gradient():
    rng = np.random.default_rng(4)
    a, b = Tensor(rng.normal(size=(3, 3)), requires_grad=True), Tensor(rng.normal(size=(3, 2)), requires_grad=True)
    jm = {(i, j): (i + j) % 4 for i in range(3) for j in range(2)}
    feasible = [t for t in jm if t != (2, 1)]
    w = Tensor(rng.normal(size=(3, 4)))

    def f():
        g = D.factorized_grounding([T.softmax_t(a), T.softmax_t(b)], jm, 4, feasible)
        return T.sum(T.mul(g, w))

    assert grad_check(f, [a, b]) < 1e-6
