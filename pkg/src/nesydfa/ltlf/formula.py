"""LTLf abstract syntax."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

TRUE = "true"
FALSE = "false"
PROP = "prop"
NOT = "not"
AND = "and"
OR = "or"
NEXT = "next"
WEAK_NEXT = "weak_next"
UNTIL = "until"
RELEASE = "release"
EVENTUALLY = "eventually"
GLOBALLY = "globally"

ARITY = {
    TRUE: 0, FALSE: 0, PROP: 0,
    NOT: 1, NEXT: 1, WEAK_NEXT: 1, EVENTUALLY: 1, GLOBALLY: 1,
    AND: 2, OR: 2, UNTIL: 2, RELEASE: 2,
}


@dataclass(frozen=True)
class Formula:
    kind: str
    children: tuple["Formula", ...] = ()
    name: str | None = None

    def __post_init__(self):
        if self.kind not in ARITY:
            raise ValueError(f"unknown formula kind {self.kind!r}")
        if len(self.children) != ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {ARITY[self.kind]} operands, got {len(self.children)}")
        if (self.kind == PROP) != (self.name is not None):
            raise ValueError("only propositions carry a name")

    def __str__(self) -> str:
        from .parser import to_text
        return to_text(self)

    # builder sugar: & | ~ mirror the grammar
    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __invert__(self) -> "Formula":
        return Not(self)

    def walk(self) -> Iterator["Formula"]:
        yield self
        for c in self.children:
            yield from c.walk()


def Prop(name: str) -> Formula:
    return Formula(PROP, (), name)


def Not(a: Formula) -> Formula:
    return Formula(NOT, (a,))


def And(a: Formula, b: Formula) -> Formula:
    return Formula(AND, (a, b))


def Or(a: Formula, b: Formula) -> Formula:
    return Formula(OR, (a, b))


def Implies(a: Formula, b: Formula) -> Formula:
    return Or(Not(a), b)


def Iff(a: Formula, b: Formula) -> Formula:
    return And(Implies(a, b), Implies(b, a))


def Next(a: Formula) -> Formula:
    return Formula(NEXT, (a,))


def WeakNext(a: Formula) -> Formula:
    return Formula(WEAK_NEXT, (a,))


def Until(a: Formula, b: Formula) -> Formula:
    return Formula(UNTIL, (a, b))


def Release(a: Formula, b: Formula) -> Formula:
    return Formula(RELEASE, (a, b))


def Eventually(a: Formula) -> Formula:
    return Formula(EVENTUALLY, (a,))


def Globally(a: Formula) -> Formula:
    return Formula(GLOBALLY, (a,))


Top = Formula(TRUE)
Bottom = Formula(FALSE)


def conjoin(parts: list[Formula]) -> Formula:
    if not parts:
        return Top
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def propositions(phi: Formula) -> list[str]:
    """Proposition names used by ``phi``, in first-occurrence order."""
    seen: dict[str, None] = {}
    for node in phi.walk():
        if node.kind == PROP:
            seen.setdefault(node.name, None)
    return list(seen)


def check_props(phi: Formula, props: list[str]) -> None:
    unknown = [p for p in propositions(phi) if p not in props]
    if unknown:
        raise UnknownPropositionError(f"unknown proposition(s) {unknown}; declared {list(props)}")


class UnknownPropositionError(ValueError):
    pass
