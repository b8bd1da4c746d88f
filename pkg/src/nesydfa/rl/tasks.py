"""Navigation tasks over the gridworld alphabet."""
from __future__ import annotations

from ..ltlf import compile as compile_ltlf
from ..ltlf import pattern
from ..ltlf.dfa import Dfa
from ..ltlf.formula import And, Formula, Not, Or, Prop, Until

GRID_ALPHABET = ("P", "G", "D", "L", "E")
ITEMS = ("P", "G", "D", "L")

_CLASS1 = {
    "visit_pg": lambda: pattern("visit", ["P", "G"]),
    "seq_pgd": lambda: pattern("seq_visit", ["P", "G", "D"]),
    "visit_pg_seq_gd": lambda: And(pattern("visit", ["P", "G"]), pattern("seq_visit", ["G", "D"])),
}


def task_suite() -> list[tuple[str, Formula, int]]:
    """``(task id, formula, class)``; class 2 adds lava avoidance to each class 1 task."""
    out = [(name, build(), 1) for name, build in _CLASS1.items()]
    out += [(name + "_avoid", And(build(), pattern("glob_avoid", ["L"])), 2)
            for name, build in _CLASS1.items()]
    return out


def task_formula(task_id: str) -> Formula:
    if task_id == "minecraft":
        return minecraft_formula()
    for name, phi, _ in task_suite():
        if name == task_id:
            return phi
    known = [t for t, _, _ in task_suite()] + ["minecraft"]
    raise KeyError(f"unknown task {task_id!r}; known: {', '.join(known)}")


def task_ids() -> list[str]:
    return [t for t, _, _ in task_suite()] + ["minecraft"]


def task_dfa(task_id: str) -> Dfa:
    return compile_ltlf(task_formula(task_id), GRID_ALPHABET)


def minecraft_formula() -> Formula:
    """Pickaxe and gem in either order, then the door; lava is never touched on the way."""
    P, G, D, L = (Prop(x) for x in "PGDL")
    safe = Not(L)

    def then(a: Formula, rest: Formula) -> Formula:
        return And(a, Until(safe, rest))

    return Until(safe, Or(then(P, then(G, D)), then(G, then(P, D))))


__all__ = ["GRID_ALPHABET", "ITEMS", "task_suite", "task_formula", "task_ids", "task_dfa",
           "minecraft_formula"]
