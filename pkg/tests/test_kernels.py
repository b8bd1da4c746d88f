import os
import subprocess
import sys

import numpy as np
import pytest

from nesydfa import _kernels as K

compiled = pytest.mark.skipif(K.BACKEND != "cython", reason="compiled kernels not built")


def _problem(seed, n=4, length=9, nq=5, ns=3):
    rng = np.random.default_rng(seed)
    mu = rng.dirichlet(np.ones(nq))
    trans = rng.dirichlet(np.ones(nq), size=(ns, nq))
    sig = rng.dirichlet(np.ones(ns), size=(n, length))
    return rng, mu, trans, sig


@pytest.mark.parametrize("pure", [True, False])
def test_forward_matches_direct_loop(pure):
    _, mu, trans, sig = _problem(0)
    q = K.belief_forward(mu, trans, sig, pure=pure)
    for b in range(sig.shape[0]):
        cur = mu
        assert np.allclose(q[b, 0], cur)
        for i in range(sig.shape[1]):
            cur = sum(sig[b, i, j] * (cur @ trans[j]) for j in range(trans.shape[0]))
            assert np.allclose(q[b, i + 1], cur, atol=1e-14)


@compiled
def test_backends_agree():
    rng, mu, trans, sig = _problem(1, n=6, length=20, nq=7, ns=4)
    qa = K.belief_forward(mu, trans, sig, pure=False)
    qb = K.belief_forward(mu, trans, sig, pure=True)
    assert np.abs(qa - qb).max() < 1e-14
    gq = rng.normal(size=qa.shape)
    for a, b in zip(K.belief_backward(trans, sig, qa, gq, pure=False),
                    K.belief_backward(trans, sig, qb, gq, pure=True)):
        assert np.abs(a - b).max() < 1e-12
    delta = rng.integers(0, 7, size=(7, 4))
    traces = rng.integers(0, 4, size=(10, 15))
    assert np.array_equal(K.symbolic_runs(delta, 2, traces, pure=False),
                          K.symbolic_runs(delta, 2, traces, pure=True))


@pytest.mark.parametrize("pure", [True, False])
def test_backward_matches_finite_differences(pure):
    rng, mu, trans, sig = _problem(2, n=2, length=4, nq=3, ns=2)
    w = rng.normal(size=(2, 5, 3))

    def loss(m, t, s):
        return float((K.belief_forward(m, t, s, pure=pure) * w).sum())

    q = K.belief_forward(mu, trans, sig, pure=pure)
    dmu, dtrans, dsig = K.belief_backward(trans, sig, q, w, pure=pure)
    h = 1e-6
    for arr, grad, which in ((mu, dmu, 0), (trans, dtrans, 1), (sig, dsig, 2)):
        for idx in np.ndindex(arr.shape):
            args = [mu.copy(), trans.copy(), sig.copy()]
            args[which][idx] += h
            up = loss(*args)
            args[which][idx] -= 2 * h
            down = loss(*args)
            assert abs((up - down) / (2 * h) - grad[idx]) < 1e-7


def test_symbolic_runs_validation():
    delta = np.array([[0, 1], [1, 0]])
    assert K.symbolic_runs(delta, 0, np.array([[1, 1, 0]])).tolist() == [[0, 1, 0, 0]]
    with pytest.raises(ValueError):
        K.symbolic_runs(delta, 0, np.array([[2]]))
    with pytest.raises(ValueError):
        K.symbolic_runs(delta, 0, np.array([1, 0]))


def test_environment_variable_forces_numpy():
    env = dict(os.environ, NESYDFA_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import nesydfa._kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
