"""Formula families: navigation patterns and the Declare constraint templates."""
from __future__ import annotations

from typing import Callable, Sequence

from .formula import (
    And, Eventually as F, Formula, Globally as G, Iff, Implies, Next as X, Not,
    Or, Prop, Until as U, WeakNext as N, conjoin,
)

VISIT = "visit"
SEQ_VISIT = "seq_visit"
GLOB_AVOID = "glob_avoid"


def pattern(kind: str, props: Sequence[str]) -> Formula:
    """``visit``: every prop eventually; ``seq_visit``: props in order; ``glob_avoid``: never any prop."""
    props = list(props)
    if not props:
        raise ValueError("a pattern needs at least one proposition")
    if kind == VISIT:
        return conjoin([F(Prop(p)) for p in props])
    if kind == SEQ_VISIT:
        out = F(Prop(props[-1]))
        for p in reversed(props[:-1]):
            out = F(And(Prop(p), out))
        return out
    if kind == GLOB_AVOID:
        return conjoin([G(Not(Prop(p))) for p in props])
    raise ValueError(f"unknown pattern kind {kind!r}")


def _precedence(a: Formula, b: Formula) -> Formula:
    # b may not happen before the first a
    return Or(U(Not(b), a), G(Not(b)))


def _alt_response(a, b):
    return G(Implies(a, X(U(Not(a), b))))


def _alt_precedence(a, b):
    return And(_precedence(a, b), G(Implies(b, N(_precedence(a, b)))))


def _templates() -> dict[str, Callable[[Formula, Formula], Formula]]:
    return {
        "existence": lambda a, b: F(a),
        "absence2": lambda a, b: Not(F(And(a, X(F(a))))),
        "choice": lambda a, b: Or(F(a), F(b)),
        "exclusive_choice": lambda a, b: And(Or(F(a), F(b)), Not(And(F(a), F(b)))),
        "responded_existence": lambda a, b: Implies(F(a), F(b)),
        "coexistence": lambda a, b: Iff(F(a), F(b)),
        "response": lambda a, b: G(Implies(a, F(b))),
        "precedence": _precedence,
        "succession": lambda a, b: And(G(Implies(a, F(b))), _precedence(a, b)),
        "alternate_response": _alt_response,
        "alternate_precedence": _alt_precedence,
        "alternate_succession": lambda a, b: And(_alt_response(a, b), _alt_precedence(a, b)),
        "chain_response": lambda a, b: G(Implies(a, X(b))),
        "chain_precedence": lambda a, b: G(Implies(X(b), a)),
        "chain_succession": lambda a, b: And(G(Implies(a, X(b))), G(Implies(X(b), a))),
        "not_coexistence": lambda a, b: Not(And(F(a), F(b))),
        "negation_response": lambda a, b: G(Implies(a, Not(F(b)))),
        "negation_precedence": lambda a, b: G(Implies(F(b), Not(a))),
        "negation_succession": lambda a, b: And(G(Implies(a, Not(F(b)))), G(Implies(F(b), Not(a)))),
        "responded_absence": lambda a, b: Implies(F(a), Not(F(b))),
        "init": lambda a, b: a,
    }


DECLARE_PROPS = ("a", "b")


def declare_catalog() -> dict[str, Callable[..., Formula]]:
    """Named constructors ``template(a="a", b="b") -> Formula`` for the 21 Declare templates."""
    def bind(tmpl):
        def build(a: str = "a", b: str = "b") -> Formula:
            return tmpl(Prop(a), Prop(b))
        build.__doc__ = tmpl.__doc__
        return build

    return {name: bind(t) for name, t in _templates().items()}


def declare_formulas(a: str = "a", b: str = "b") -> dict[str, Formula]:
    return {name: build(a, b) for name, build in declare_catalog().items()}
