"""Compare the compiled and numpy belief kernels on representative shapes.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from nesydfa import _kernels as K

SHAPES = [  # (batch, length, states, symbols)
    (62, 5, 4, 2),       # grounding training batch
    (1000, 15, 6, 2),    # long test split
    (1, 60, 12, 5),      # one gridworld episode
    (50, 60, 12, 5),     # grounder refit window
]


def _problem(n, length, nq, ns, seed=0):
    rng = np.random.default_rng(seed)
    mu = np.eye(nq)[0]
    trans = rng.dirichlet(np.ones(nq), size=(ns, nq))
    sig = rng.dirichlet(np.ones(ns), size=(n, length))
    delta = rng.integers(0, nq, size=(nq, ns))
    traces = rng.integers(0, ns, size=(n, length))
    return mu, trans, sig, delta, traces


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("numpy", True)] + ([("cython", False)] if K.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled kernels not built; timing the numpy backend only")
    print(f"{'kernel':<10}{'shape (N,L,Q,S)':<22}" + "".join(f"{b:>12}" for b, _ in backends) + "   speedup")
    for shape in SHAPES:
        mu, trans, sig, delta, traces = _problem(*shape)
        q = K.belief_forward(mu, trans, sig)
        gq = np.ones_like(q)
        kernels = {
            "forward": lambda pure: K.belief_forward(mu, trans, sig, pure=pure),
            "backward": lambda pure: K.belief_backward(trans, sig, q, gq, pure=pure),
            "symbolic": lambda pure: K.symbolic_runs(delta, 0, traces, pure=pure),
        }
        for name, fn in kernels.items():
            times = [_best(lambda: fn(pure), args.repeat) for _, pure in backends]
            speed = f"{times[0] / times[1]:9.1f}x" if len(times) == 2 else ""
            print(f"{name:<10}{str(shape):<22}" + "".join(f"{t * 1e3:10.3f}ms" for t in times) + speed)


if __name__ == "__main__":
    main()
