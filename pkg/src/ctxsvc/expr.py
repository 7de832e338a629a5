"""Constraint expression language.

Infix first-order expressions used for parameter constraints, context rules,
pre/postconditions, legal issues, automaton guards and query predicates.

Concrete syntax::

    a == b   a != b   a < b   a <= b   a > b   a >= b
    p && q   p || q   !p      p => q
    x + y    x - y    x * y   ( ... )
    ctx.<dimension>            requester context reference
    target := value            effect (legal issues, automaton updates)

Identifiers may contain dots (``RequesterContext.age``, ``M.Final_1``).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Union


class ExprError(Exception):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.message = message
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at column {pos + 1}: {text!r}" if text else message)


class UnboundName(ExprError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound name {name!r}")


class TypeMismatch(ExprError):
    pass


# --------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Lit:
    value: Union[bool, int, float, str]


@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class CtxRef:
    dim: str


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    """``max(a, b)`` / ``min(a, b)`` over numbers."""

    fn: str
    args: tuple


@dataclass(frozen=True)
class Assign:
    target: str
    value: "Expr"


Expr = Union[Lit, Name, CtxRef, Not, BinOp, Call, Assign]

FUNCTIONS = ("max", "min")

TRUE = Lit(True)
FALSE = Lit(False)

LOGICAL = ("&&", "||", "=>")
COMPARISON = ("==", "!=", "<", "<=", ">", ">=")
ARITHMETIC = ("+", "-", "*")
_ASSOCIATIVE = ("&&", "||", "+", "*")


def conj(items) -> Expr:
    """Left-nested conjunction; ``true`` for no items."""
    out = None
    for item in items:
        out = item if out is None else BinOp("&&", out, item)
    return TRUE if out is None else out


def conjuncts(e: Expr) -> list:
    if isinstance(e, BinOp) and e.op == "&&":
        return conjuncts(e.left) + conjuncts(e.right)
    if e == TRUE:
        return []
    return [e]


def negate(e: Expr) -> Expr:
    if isinstance(e, Not):
        return e.operand
    return Not(e)


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, Not):
        yield from walk(e.operand)
    elif isinstance(e, BinOp):
        yield from walk(e.left)
        yield from walk(e.right)
    elif isinstance(e, Call):
        for a in e.args:
            yield from walk(a)
    elif isinstance(e, Assign):
        yield from walk(e.value)


def names(e: Expr) -> set:
    """Identifiers referenced by ``e`` (assignment targets included)."""
    out = {n.id for n in walk(e) if isinstance(n, Name)}
    if isinstance(e, Assign):
        out.add(e.target)
    return out


def ctx_dims(e: Expr) -> set:
    return {n.dim for n in walk(e) if isinstance(n, CtxRef)}


def transform(e: Expr, fn: Callable[[Expr], Expr | None]) -> Expr:
    """Bottom-up rewrite; ``fn`` returns a replacement or None to keep the node."""
    if isinstance(e, Not):
        e = Not(transform(e.operand, fn))
    elif isinstance(e, BinOp):
        e = BinOp(e.op, transform(e.left, fn), transform(e.right, fn))
    elif isinstance(e, Call):
        e = Call(e.fn, tuple(transform(a, fn) for a in e.args))
    elif isinstance(e, Assign):
        e = Assign(e.target, transform(e.value, fn))
    out = fn(e)
    return e if out is None else out


def rename(e: Expr, mapping: dict) -> Expr:
    def fn(node):
        if isinstance(node, Name) and node.id in mapping:
            return Name(mapping[node.id])
        if isinstance(node, Assign) and node.target in mapping:
            return Assign(mapping[node.target], node.value)
        return None

    return transform(e, fn)


# ----------------------------------------------------------------- lexing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+\.\d+|\d+)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)
  | (?P<op>:=|=>|==|!=|<=|>=|>>|<>|\|\||\|>|&&|\[\]|<|>|!|\+|-|\*|\(|\)|~|,)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num, str, ident, op, eof
    text: str
    pos: int


def tokenize(text: str) -> list:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


class TokenStream:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        tok = self.peek
        if tok.kind in ("op", "ident") and tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.peek
        if tok.kind in ("op", "ident") and tok.text == text:
            self.i += 1
            return tok
        self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}")

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek
        raise ExprSyntaxError(message, self.text, tok.pos)


# ---------------------------------------------------------------- parsing


def parse_expr(stream: TokenStream) -> Expr:
    """Parse one expression from ``stream``, leaving trailing tokens."""
    return _implies(stream)


def _implies(s: TokenStream) -> Expr:
    left = _or(s)
    if s.accept("=>"):
        return BinOp("=>", left, _implies(s))
    return left


def _or(s: TokenStream) -> Expr:
    left = _and(s)
    while s.accept("||"):
        left = BinOp("||", left, _and(s))
    return left


def _and(s: TokenStream) -> Expr:
    left = _cmp(s)
    while s.accept("&&"):
        left = BinOp("&&", left, _cmp(s))
    return left


def _cmp(s: TokenStream) -> Expr:
    left = _sum(s)
    tok = s.peek
    if tok.kind == "op" and tok.text in COMPARISON:
        s.next()
        left = BinOp(tok.text, left, _sum(s))
        nxt = s.peek
        if nxt.kind == "op" and nxt.text in COMPARISON:
            s.error("comparisons do not chain")
    return left


def _sum(s: TokenStream) -> Expr:
    left = _product(s)
    while s.peek.kind == "op" and s.peek.text in ("+", "-"):
        op = s.next().text
        left = BinOp(op, left, _product(s))
    return left


def _product(s: TokenStream) -> Expr:
    left = _unary(s)
    while s.accept("*"):
        left = BinOp("*", left, _unary(s))
    return left


def _unary(s: TokenStream) -> Expr:
    if s.accept("!"):
        return Not(_unary(s))
    if s.peek.kind == "op" and s.peek.text == "-":
        minus = s.next()
        tok = s.peek
        if tok.kind != "num":
            s.error("unary minus applies to numeric literals only", minus)
        s.next()
        return Lit(-_number(tok.text))
    return _atom(s)


def _number(text: str):
    return float(text) if "." in text else int(text)


def _atom(s: TokenStream) -> Expr:
    tok = s.peek
    if tok.kind == "num":
        s.next()
        return Lit(_number(tok.text))
    if tok.kind == "str":
        s.next()
        return Lit(json.loads(tok.text))
    if tok.kind == "ident":
        s.next()
        if tok.text == "true":
            return TRUE
        if tok.text == "false":
            return FALSE
        if tok.text.startswith("ctx."):
            return CtxRef(tok.text[4:])
        if tok.text in FUNCTIONS and s.peek.text == "(":
            s.next()
            args = [parse_expr(s)]
            while s.accept(","):
                args.append(parse_expr(s))
            s.expect(")")
            if len(args) < 2:
                s.error(f"{tok.text}() needs at least two arguments", tok)
            return Call(tok.text, tuple(args))
        return Name(tok.text)
    if s.accept("("):
        e = parse_expr(s)
        s.expect(")")
        return e
    s.error(f"unexpected {tok.text or 'end of input'!r}")


def parse(text: str, allow_assign: bool = False) -> Expr:
    """Parse a complete expression; ``allow_assign`` admits ``target := value``."""
    s = TokenStream(text)
    if allow_assign and s.peek.kind == "ident" and s.tokens[1].text == ":=":
        target = s.next()
        if target.text.startswith("ctx."):
            s.error("cannot assign to a context reference", target)
        s.next()
        e = Assign(target.text, parse_expr(s))
    else:
        e = parse_expr(s)
    if s.peek.kind != "eof":
        s.error(f"unexpected trailing {s.peek.text!r}")
    return e


# --------------------------------------------------------------- printing


def format_number(v) -> str:
    text = repr(v)
    if isinstance(v, float) and ("e" in text or "E" in text):
        text = f"{v:.20f}".rstrip("0")
        if text.endswith("."):
            text += "0"
    return text


def _is_compound(e: Expr) -> bool:
    return isinstance(e, BinOp)


def to_text(e: Expr, assign_op: str = ":=", ctx_prefix: str = "ctx.") -> str:
    """Compact canonical rendering; ``parse(to_text(e)) == e``."""

    def go(node: Expr) -> str:
        if isinstance(node, Lit):
            v = node.value
            if isinstance(v, bool):
                return "true" if v else "false"
            if isinstance(v, str):
                return json.dumps(v, ensure_ascii=False)
            return format_number(v)
        if isinstance(node, Name):
            return node.id
        if isinstance(node, CtxRef):
            return ctx_prefix + node.dim
        if isinstance(node, Not):
            inner = go(node.operand)
            return "!" + (f"({inner})" if _is_compound(node.operand) else inner)
        if isinstance(node, Call):
            return f"{node.fn}({','.join(go(a) for a in node.args)})"
        if isinstance(node, Assign):
            return f"{node.target}{assign_op}{go(node.value)}"
        left = go(node.left)
        if _is_compound(node.left) and not (
            node.op in _ASSOCIATIVE and node.left.op == node.op
        ):
            left = f"({left})"
        right = go(node.right)
        # "=>" is right-associative, so a right-nested chain prints bare
        if _is_compound(node.right) and not (node.op == "=>" == node.right.op):
            right = f"({right})"
        return f"{left}{node.op}{right}"

    return go(e)


# ------------------------------------------------------------- evaluation


def _num(v, op):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeMismatch(f"operator {op!r} needs numbers, got {v!r}")
    return v


def _boolean(v, op):
    if not isinstance(v, bool):
        raise TypeMismatch(f"operator {op!r} needs booleans, got {v!r}")
    return v


def _same_kind(a, b) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool)
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return True
    return type(a) is type(b)


def evaluate(e: Expr, lookup: Callable[[str], Any]) -> Any:
    """Evaluate ``e``; ``lookup`` resolves names (context refs as ``ctx.<dim>``).

    ``lookup`` raises KeyError for unknown names.
    """
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, (Name, CtxRef)):
        key = e.id if isinstance(e, Name) else "ctx." + e.dim
        try:
            return lookup(key)
        except KeyError:
            raise UnboundName(key) from None
    if isinstance(e, Not):
        return not _boolean(evaluate(e.operand, lookup), "!")
    if isinstance(e, Call):
        values = [_num(evaluate(a, lookup), e.fn) for a in e.args]
        return max(values) if e.fn == "max" else min(values)
    if isinstance(e, Assign):
        raise TypeMismatch(f"effect {e.target}:=... has no truth value")
    op = e.op
    if op == "&&":
        return _boolean(evaluate(e.left, lookup), op) and _boolean(evaluate(e.right, lookup), op)
    if op == "||":
        return _boolean(evaluate(e.left, lookup), op) or _boolean(evaluate(e.right, lookup), op)
    if op == "=>":
        return (not _boolean(evaluate(e.left, lookup), op)) or _boolean(evaluate(e.right, lookup), op)
    a = evaluate(e.left, lookup)
    b = evaluate(e.right, lookup)
    if op in ("==", "!="):
        if not _same_kind(a, b):
            raise TypeMismatch(f"cannot compare {a!r} with {b!r}")
        return (a == b) if op == "==" else (a != b)
    a, b = _num(a, op), _num(b, op)
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    raise ExprError(f"unknown operator {op!r}")


def _no_names(key):
    raise KeyError(key)


def is_constant(e: Expr) -> bool:
    return not any(isinstance(n, (Name, CtxRef)) for n in walk(e))


def simplify(e: Expr) -> Expr:
    """Fold constant arithmetic subexpressions."""

    def fn(node):
        if (isinstance(node, Call) or isinstance(node, BinOp) and node.op in ARITHMETIC) and is_constant(node):
            return Lit(evaluate(node, _no_names))
        return None

    return transform(e, fn)
