import itertools

import numpy as np
import pytest

from nesydfa.ltlf import Dfa

GRID_ALPHABET = ("P", "G", "D", "L", "E")


def minecraft_dfa() -> Dfa:
    """Hand transcription of the pickaxe/gem/door/lava task machine.

    Visit pickaxe and gem in any order, then the door, never touching lava.
    States: 0 start, 1 has pickaxe, 2 has gem, 3 has both, 4 done, 5 burnt.
    """
    P, G, D, L, E = range(5)
    rows = {
        0: {P: 1, G: 2, D: 0, L: 5, E: 0},
        1: {P: 1, G: 3, D: 1, L: 5, E: 1},
        2: {P: 3, G: 2, D: 2, L: 5, E: 2},
        3: {P: 3, G: 3, D: 4, L: 5, E: 3},
        4: {s: 4 for s in range(5)},
        5: {s: 5 for s in range(5)},
    }
    delta = np.array([[rows[q][s] for s in range(5)] for q in range(6)])
    return Dfa(GRID_ALPHABET, delta, 0, frozenset({4}))


def all_traces(alphabet, max_len, min_len=1):
    for n in range(min_len, max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


def random_dfa(rng: np.random.Generator, n_states: int, alphabet) -> Dfa:
    delta = rng.integers(0, n_states, size=(n_states, len(alphabet)))
    acc = frozenset(int(q) for q in np.flatnonzero(rng.random(n_states) < 0.4))
    return Dfa(tuple(alphabet), delta, 0, acc)


@pytest.fixture
def minecraft():
    return minecraft_dfa()


# ------------------------------------------------------------------ acceptance report

_CRITERIA: dict[int, tuple[bool, str]] = {}


class CriterionRecorder:
    def __init__(self):
        self.number = None

    def __call__(self, number: int, ok: bool, detail: str) -> None:
        self.number = number
        _CRITERIA[number] = (bool(ok), detail)


@pytest.fixture
def criterion(request):
    rec = CriterionRecorder()
    yield rec
    if rec.number is None:
        num = int(request.node.name.split("_")[1])
        _CRITERIA[num] = (False, "did not complete (error before the check)")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        ok, detail = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
