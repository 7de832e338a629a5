"""Composition expressions over the seven constructs.

Grammar (all binary operators share one precedence level and associate to
the left; parentheses regroup)::

    expr  := term (binop term)*
    binop := '>>' | '||' | '|>' | '<>' | '~'
    term  := NAME | '(' expr ')'
           | 'if' '(' constraint ')' term 'else' term
           | 'while' '(' constraint ')' term
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .. import expr as E


class CompositionSyntaxError(Exception):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.message = message
        self.pos = pos
        super().__init__(f"{message} at column {pos + 1}: {text!r}" if text else message)


class UnknownService(Exception):
    pass


@dataclass(frozen=True)
class ServiceRef:
    name: str


@dataclass(frozen=True)
class Seq:
    left: "CompositionExpr"
    right: "CompositionExpr"


@dataclass(frozen=True)
class Par:
    left: "CompositionExpr"
    right: "CompositionExpr"


@dataclass(frozen=True)
class Priority:
    left: "CompositionExpr"
    right: "CompositionExpr"


@dataclass(frozen=True)
class NoOrder:
    left: "CompositionExpr"
    right: "CompositionExpr"


@dataclass(frozen=True)
class NonDet:
    left: "CompositionExpr"
    right: "CompositionExpr"


@dataclass(frozen=True)
class Cond:
    condition: E.Expr
    then: "CompositionExpr"
    else_: "CompositionExpr"


@dataclass(frozen=True)
class Iter:
    condition: E.Expr
    body: "CompositionExpr"


CompositionExpr = Union[ServiceRef, Seq, Par, Priority, NoOrder, NonDet, Cond, Iter]

BINARY = {">>": Seq, "||": Par, "|>": Priority, "<>": NoOrder, "~": NonDet}
SYMBOL = {cls: sym for sym, cls in BINARY.items()}
KEYWORDS = ("if", "else", "while")


def service_refs(e: CompositionExpr) -> Iterator[str]:
    if isinstance(e, ServiceRef):
        yield e.name
    elif isinstance(e, Cond):
        yield from service_refs(e.then)
        yield from service_refs(e.else_)
    elif isinstance(e, Iter):
        yield from service_refs(e.body)
    else:
        yield from service_refs(e.left)
        yield from service_refs(e.right)


def parse_composition_expr(text: str, catalog: Optional[dict] = None) -> CompositionExpr:
    """Parse ``text``; with a ``catalog`` every service name must resolve."""
    try:
        s = E.TokenStream(text)
        tree = _expr(s)
        if s.peek.kind != "eof":
            s.error(f"unexpected {s.peek.text!r}")
    except E.ExprSyntaxError as exc:
        raise CompositionSyntaxError(exc.message, text, exc.pos) from None
    if catalog is not None:
        missing = sorted({n for n in service_refs(tree) if n not in catalog})
        if missing:
            raise UnknownService(f"unknown service(s): {', '.join(missing)}")
    return tree


def _expr(s: E.TokenStream) -> CompositionExpr:
    left = _term(s)
    while s.peek.kind == "op" and s.peek.text in BINARY:
        cls = BINARY[s.next().text]
        left = cls(left, _term(s))
    return left


def _term(s: E.TokenStream) -> CompositionExpr:
    tok = s.peek
    if tok.kind == "ident" and tok.text == "if":
        s.next()
        s.expect("(")
        cond = E.parse_expr(s)
        s.expect(")")
        then = _term(s)
        s.expect("else")
        return Cond(cond, then, _term(s))
    if tok.kind == "ident" and tok.text == "while":
        s.next()
        s.expect("(")
        cond = E.parse_expr(s)
        s.expect(")")
        return Iter(cond, _term(s))
    if tok.kind == "ident" and tok.text not in KEYWORDS and "." not in tok.text:
        s.next()
        return ServiceRef(tok.text)
    if s.accept("("):
        e = _expr(s)
        s.expect(")")
        return e
    s.error(f"expected a service, '(' , 'if' or 'while', found {tok.text or 'end of input'!r}")


def to_text(e: CompositionExpr) -> str:
    """Render with explicit parentheses around every compound operand."""

    def operand(x):
        return x.name if isinstance(x, ServiceRef) else f"({to_text(x)})"

    if isinstance(e, ServiceRef):
        return e.name
    if isinstance(e, Cond):
        return f"if ({E.to_text(e.condition)}) {operand(e.then)} else {operand(e.else_)}"
    if isinstance(e, Iter):
        return f"while ({E.to_text(e.condition)}) {operand(e.body)}"
    left = to_text(e.left) if type(e.left) in SYMBOL else operand(e.left)
    return f"{left} {SYMBOL[type(e)]} {operand(e.right)}"
