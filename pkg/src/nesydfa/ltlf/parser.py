"""Text syntax for LTLf formulas.

Grammar, loosest binding first::

    impl  := until ['->' impl]                 (a -> b  is  !a | b)
    until := or [('U' | 'R') until]            (right associative)
    or    := and ('|' and)*
    and   := unary ('&' unary)*
    unary := ('!' | 'X' | 'N' | 'F' | 'G') unary | atom
    atom  := 'true' | 'false' | IDENT | '(' impl ')'

The operator letters may double as proposition names (the gridworld
alphabet uses ``G`` for "gem"). A letter in operand position is read as an
operator when the following token can start an operand, and as a
proposition otherwise, so ``G !L`` is "globally not L" and ``F G`` is
"eventually G".
"""
from __future__ import annotations

import re
from typing import Sequence

from . import formula as f
from .formula import Formula, UnknownPropositionError

_TOKEN = re.compile(r"\s*(?:(->)|([()!&|])|([A-Za-z_][A-Za-z0-9_]*))")
_UNARY = {"X": f.Next, "N": f.WeakNext, "F": f.Eventually, "G": f.Globally}
_BINARY = {"U": f.Until, "R": f.Release}


class LtlfSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


def _tokenize(text: str) -> list[tuple[str, int]]:
    out = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise LtlfSyntaxError(f"unexpected character {text[pos]!r}", pos)
        tok = m.group(1) or m.group(2) or m.group(3)
        out.append((tok, m.start(m.lastindex)))
        pos = m.end()
    out.append(("", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, props: Sequence[str] | None):
        self.toks = _tokenize(text)
        self.i = 0
        self.props = None if props is None else list(props)

    def peek(self, k: int = 0) -> str:
        return self.toks[min(self.i + k, len(self.toks) - 1)][0]

    def offset(self) -> int:
        return self.toks[self.i][1]

    def take(self) -> str:
        tok = self.toks[self.i][0]
        self.i += 1
        return tok

    def starts_operand(self, tok: str) -> bool:
        if tok in ("(", "!", "true", "false") or tok in _UNARY:
            return True
        return bool(tok) and (tok[0].isalpha() or tok[0] == "_") and tok not in _BINARY

    def parse(self) -> Formula:
        node = self.impl()
        if self.peek():
            raise LtlfSyntaxError(f"unexpected token {self.peek()!r}", self.offset())
        return node

    def impl(self) -> Formula:
        left = self.until()
        if self.peek() == "->":
            self.take()
            return f.Implies(left, self.impl())
        return left

    def until(self) -> Formula:
        left = self.disj()
        if self.peek() in _BINARY:
            op = _BINARY[self.take()]
            return op(left, self.until())
        return left

    def disj(self) -> Formula:
        node = self.conj()
        while self.peek() == "|":
            self.take()
            node = f.Or(node, self.conj())
        return node

    def conj(self) -> Formula:
        node = self.unary()
        while self.peek() == "&":
            self.take()
            node = f.And(node, self.unary())
        return node

    def unary(self) -> Formula:
        tok = self.peek()
        if tok == "!":
            self.take()
            return f.Not(self.unary())
        if tok in _UNARY and ((self.props is not None and tok not in self.props)
                              or self.starts_operand(self.peek(1))):
            self.take()
            return _UNARY[tok](self.unary())
        return self.atom()

    def atom(self) -> Formula:
        tok, pos = self.toks[self.i]
        if tok == "(":
            self.take()
            node = self.impl()
            if self.peek() != ")":
                raise LtlfSyntaxError("expected ')'", self.offset())
            self.take()
            return node
        if tok == "true":
            self.take()
            return f.Top
        if tok == "false":
            self.take()
            return f.Bottom
        if tok and (tok[0].isalpha() or tok[0] == "_") and tok not in _BINARY:
            if self.props is not None and tok not in self.props:
                raise UnknownPropositionError(f"unknown proposition {tok!r} at offset {pos}")
            self.take()
            return f.Prop(tok)
        what = "end of input" if not tok else repr(tok)
        raise LtlfSyntaxError(f"expected operand, found {what}", pos)


def parse(text: str, props: Sequence[str] | None = None) -> Formula:
    """Parse ``text``; when ``props`` is given every proposition must belong to it."""
    return _Parser(text, props).parse()


_LEVEL = {
    f.UNTIL: 1, f.RELEASE: 1, f.OR: 2, f.AND: 3,
    f.NOT: 4, f.NEXT: 4, f.WEAK_NEXT: 4, f.EVENTUALLY: 4, f.GLOBALLY: 4,
    f.TRUE: 5, f.FALSE: 5, f.PROP: 5,
}
_SYMBOL = {f.UNTIL: "U", f.RELEASE: "R", f.OR: "|", f.AND: "&",
           f.NEXT: "X", f.WEAK_NEXT: "N", f.EVENTUALLY: "F", f.GLOBALLY: "G"}


def to_text(phi: Formula) -> str:
    """Render ``phi`` with the fewest parentheses that ``parse`` reads back identically."""
    k = phi.kind
    if k == f.TRUE:
        return "true"
    if k == f.FALSE:
        return "false"
    if k == f.PROP:
        return phi.name

    def wrap(child: Formula, ok: bool) -> str:
        s = to_text(child)
        return s if ok else f"({s})"

    lvl = _LEVEL[k]
    if k == f.NOT:
        return "!" + wrap(phi.children[0], _LEVEL[phi.children[0].kind] >= 4)
    if len(phi.children) == 1:
        return f"{_SYMBOL[k]} " + wrap(phi.children[0], _LEVEL[phi.children[0].kind] >= 4)
    a, b = phi.children
    if lvl == 1:
        left_ok, right_ok = _LEVEL[a.kind] > 1, _LEVEL[b.kind] >= 1
    else:
        left_ok, right_ok = _LEVEL[a.kind] >= lvl, _LEVEL[b.kind] > lvl
    return f"{wrap(a, left_ok)} {_SYMBOL[k]} {wrap(b, right_ok)}"
