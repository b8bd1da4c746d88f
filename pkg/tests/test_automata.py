import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nesydfa.automata import (
    MooreMachine, Pfa, acceptance_probability, distance_to_accepting, equivalent,
    equivalent_bruteforce, failure_states, label_rewards, path_sum_probability, run,
    separating_trace,
)
from nesydfa.ltlf import compile, minimize, parse, pattern
from nesydfa.ltlf.formula import And
from nesydfa.rl.tasks import minecraft_formula

from conftest import GRID_ALPHABET, all_traces, random_dfa

AB = ["a", "b"]
GRID = list(GRID_ALPHABET)


# ------------------------------------------------------------------ run

def test_run_minecraft_success(minecraft):
    states, outs = run(MooreMachine.from_dfa(minecraft), ["P", "G", "D"])
    assert states[0] == 0 and states[-1] in minecraft.accepting
    assert outs[-1] == 1


def test_run_minecraft_lava(minecraft):
    states, _ = run(minecraft, ["L"])
    assert states[-1] in failure_states(minecraft)


def test_run_empty_trace(minecraft):
    states, outs = run(MooreMachine.from_dfa(minecraft), [])
    assert states == [minecraft.initial] and outs == []


def test_run_unknown_symbol(minecraft):
    with pytest.raises((KeyError, ValueError)):
        run(minecraft, ["Z"])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(GRID), max_size=12))
def test_run_length_contract(trace):
    m = MooreMachine.from_dfa(compile(parse("F P & G !L", GRID), GRID))
    states, outs = run(m, trace)
    assert len(states) == len(trace) + 1 and len(outs) == len(trace)
    assert all(outs[i] == m.output_of[states[i + 1]] for i in range(len(trace)))


# ------------------------------------------------------------------ PFA semantics

def test_degenerate_pfa_matches_dfa(minecraft):
    p = Pfa.from_dfa(minecraft)
    for t in all_traces(GRID, 4):
        assert acceptance_probability(p, t) == float(minecraft.accepts(t))


def test_hand_built_pfa_against_path_sum():
    mu = np.array([0.5, 0.3, 0.2])
    trans = np.array([
        [[0.1, 0.6, 0.3], [0.0, 1.0, 0.0], [0.5, 0.25, 0.25]],
        [[0.7, 0.2, 0.1], [0.3, 0.3, 0.4], [0.0, 0.0, 1.0]],
    ])
    rho = np.array([0.0, 1.0, 0.5])
    p = Pfa(("a", "b"), mu, trans, rho)
    got = acceptance_probability(p, "ab")
    assert abs(got - path_sum_probability(p, "ab")) < 1e-12
    assert abs(got - float(mu @ trans[0] @ trans[1] @ rho)) < 1e-12


def test_uniform_pfa_accepts_everything():
    n, k = 4, 3
    p = Pfa(("x", "y", "z"), np.full(n, 1 / n), np.full((k, n, n), 1 / n), np.ones(n))
    for t in all_traces("xyz", 3):
        assert abs(acceptance_probability(p, t) - 1.0) < 1e-12


def _random_pfa(rng):
    n = int(rng.integers(1, 5))
    k = int(rng.integers(1, 4))
    mu = rng.dirichlet(np.ones(n))
    trans = rng.dirichlet(np.ones(n), size=(k, n))
    rho = rng.random(n)
    return Pfa(tuple("abc"[:k]), mu, trans, rho)


def test_random_pfas_against_path_sum():
    rng = np.random.default_rng(7)
    for _ in range(150):
        p = _random_pfa(rng)
        t = rng.integers(0, len(p.alphabet), size=int(rng.integers(1, 6))).tolist()
        got = acceptance_probability(p, t)
        assert 0.0 <= got <= 1.0 + 1e-12
        assert abs(got - path_sum_probability(p, t)) < 1e-12


def test_pfa_invariants():
    with pytest.raises(ValueError):
        Pfa(("a",), np.array([0.5, 0.4]), np.full((1, 2, 2), 0.5), np.ones(2))
    with pytest.raises(ValueError):
        Pfa(("a",), np.array([1.0, 0.0]), np.array([[[0.5, 0.6], [0.5, 0.5]]]), np.ones(2))
    with pytest.raises(ValueError):
        Pfa(("a",), np.array([1.0, 0.0]), np.full((1, 2, 2), 0.5), np.array([1.5, 0.0]))


# ------------------------------------------------------------------ failure states and distances

def test_failure_states_examples():
    g = compile(parse("G !L", GRID), GRID)
    assert failure_states(g) == frozenset({int(g.delta[0, GRID.index("L")])})
    assert failure_states(compile(parse("F a", AB), AB)) == frozenset()


def _can_reach_accepting(d, q):
    seen, stack = {q}, [q]
    while stack:
        r = stack.pop()
        if r in d.accepting:
            return True
        for s in range(d.n_symbols):
            nxt = int(d.delta[r, s])
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


@pytest.mark.parametrize("seed", range(10))
def test_failure_states_against_forward_search(seed):
    d = random_dfa(np.random.default_rng(seed), 20, ["a", "b", "c"])
    expected = {q for q in range(d.n_states) if not _can_reach_accepting(d, q)}
    assert failure_states(d) == expected


def test_distance_to_accepting(minecraft):
    assert distance_to_accepting(minecraft).tolist() == [3, 2, 2, 1, 0, -1]


# ------------------------------------------------------------------ reward labeling

def _fig4_machine():
    return compile(pattern("visit", ["P", "L", "D"]), GRID)


def test_sparse_labeling_single_win_state():
    d = _fig4_machine()
    assert d.n_states == 8
    m, lab = label_rewards(d, "sparse", 100)
    assert m.outputs == ("win", "fail", "neutral")
    win = [q for q in range(d.n_states) if m.output_of[q] == 0]
    assert win == sorted(d.accepting) and len(win) == 1


def test_dense_labeling_four_levels():
    d = _fig4_machine()
    m, lab = label_rewards(d, "dense", 100)
    assert m.n_outputs == 4
    assert float(lab.potentials[sorted(d.accepting)[0]]) == 100.0
    assert float(lab.potentials[d.initial]) == 0.0


def test_sparse_fail_matches_failure_states(minecraft):
    m, lab = label_rewards(minecraft, "sparse", 100)
    fail = failure_states(minecraft)
    assert {q for q in range(6) if m.outputs[m.output_of[q]] == "fail"} == fail
    assert lab.reward(0, 5) == -100 and lab.reward(3, 4) == 100 and lab.reward(0, 1) == 0


def test_dense_potentials_monotone_in_distance(minecraft):
    _, lab = label_rewards(minecraft, "dense", 100)
    dist = distance_to_accepting(minecraft)
    live = [q for q in range(6) if dist[q] >= 0]
    for q in live:
        for r in live:
            if dist[q] <= dist[r]:
                assert lab.potentials[q] >= lab.potentials[r]
    assert lab.potentials[5] == -100
    # every edge on a shortest accepting path does not decrease the potential
    for q in live:
        for s in range(5):
            r = int(minecraft.delta[q, s])
            if dist[r] >= 0 and dist[r] == dist[q] - 1:
                assert lab.potentials[r] >= lab.potentials[q]


@pytest.mark.parametrize("scheme", ["dense", "sparse"])
def test_accepting_episodes_telescope_to_scale(minecraft, scheme):
    _, lab = label_rewards(minecraft, scheme, 100)
    rng = np.random.default_rng(0)
    found = 0
    while found < 1000:
        q, total = minecraft.initial, 0.0
        for _ in range(40):
            r = int(minecraft.delta[q, rng.integers(0, 5)])
            total += lab.reward(q, r)
            q = r
            if lab.is_terminal(q):
                break
        if q in minecraft.accepting:
            found += 1
            assert abs(total - 100.0) < 1e-9


def test_dense_failure_entry_costs_scale(minecraft):
    _, lab = label_rewards(minecraft, "dense", 100)
    for q in range(4):
        assert lab.reward(q, 5) == -100


def test_unsatisfiable_task_rejected():
    d = compile(parse("F a & G !a", AB), AB)
    with pytest.raises(ValueError):
        label_rewards(d, "dense")


def test_bad_scale_and_scheme(minecraft):
    with pytest.raises(ValueError):
        label_rewards(minecraft, "dense", 0)
    with pytest.raises(ValueError):
        label_rewards(minecraft, "shaped", 100)


def test_moore_json_and_dot(minecraft):
    m, lab = label_rewards(minecraft, "dense", 100)
    obj = m.to_json(lab.potentials)
    assert {"outputs", "lambda", "potentials", "delta"} <= set(obj)
    back = MooreMachine.from_json(obj)
    assert back.outputs == m.outputs
    assert back.output_of.tolist() == m.output_of.tolist()
    assert "fail" in m.to_dot()


# ------------------------------------------------------------------ equivalence

def test_equivalent_minimized(minecraft):
    d = random_dfa(np.random.default_rng(3), 15, AB)
    assert equivalent(d, minimize(d), 10)


def test_eventually_vs_globally_witness():
    fa = compile(parse("F a", AB), AB)
    ga = compile(parse("G a", AB), AB)
    assert not equivalent(fa, ga, 5)
    w = separating_trace(fa, ga, 5)
    assert len(w) == 2 and fa.accepts(w) != ga.accepts(w)


def test_minecraft_formula_matches_hand_built(minecraft):
    d = compile(minecraft_formula(), GRID)
    assert equivalent(d, minecraft, 8)
    assert d.n_states == minecraft.n_states


def test_equivalent_agrees_with_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(30):
        a = random_dfa(rng, 5, AB)
        b = random_dfa(rng, 5, AB)
        assert equivalent(a, b, 7) == equivalent_bruteforce(a, b, 7)


def test_alphabet_mismatch():
    with pytest.raises(ValueError):
        equivalent(compile(parse("F a", AB), AB), compile(parse("F a", ["a", "c"]), ["a", "c"]), 3)


def test_conjoined_patterns_are_satisfiable():
    phi = And(pattern("visit", ["P", "G"]), pattern("glob_avoid", ["L"]))
    d = compile(phi, GRID)
    _, lab = label_rewards(d, "sparse")
    assert len(lab.failure) == 1
