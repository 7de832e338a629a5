"""Well-formedness checks for configured services.

Satisfiability questions (legal rules, context rules) are decided by exhaustive
enumeration over finite domains. Domains for bool and enum variables are their
full value sets; numeric and string variables get a boundary-value domain built
from the literals the constraints compare them with, which is exact for
constraints of the form ``var <op> literal``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from . import expr as E
from .model import (
    ConfiguredService,
    Context,
    ContextInfo,
    DataType,
    as_constraint,
    is_accumulating,
)

log = logging.getLogger(__name__)

MAX_ROWS = 10**6


class SatisfiabilityError(Exception):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str

    def __str__(self):
        return f"{self.kind}: {self.message}"


# ------------------------------------------------------------ satisfiability


def constraints_jointly_satisfiable(
    cs: Iterable[E.Expr], domains: Mapping[str, Iterable[Any]], constants: Iterable[str] = ()
) -> tuple:
    """Return ``(satisfiable, witness)`` by enumerating the product of domains.

    Context references are looked up as ``ctx.<dim>`` in ``domains``. A bare
    name that is not a domain key but equals a string value of some domain (or
    is listed in ``constants``) is a symbolic constant. Effects are read as
    equalities. Raises SatisfiabilityError for a name with no domain.
    """
    cs = [as_constraint(c) for c in cs]
    domains = {k: list(v) for k, v in domains.items()}
    symbols = set(constants)
    for values in domains.values():
        symbols.update(v for v in values if isinstance(v, str))

    used = set()
    for c in cs:
        for n in E.walk(c):
            if isinstance(n, E.Name):
                if n.id in domains:
                    used.add(n.id)
                elif n.id not in symbols:
                    raise SatisfiabilityError(f"no domain declared for {n.id!r}")
            elif isinstance(n, E.CtxRef):
                key = "ctx." + n.dim
                if key not in domains:
                    raise SatisfiabilityError(f"no domain declared for {key!r}")
                used.add(key)
    order = sorted(used)
    rows = 1
    for name in order:
        rows *= max(1, len(domains[name]))
    if rows > MAX_ROWS:
        raise SatisfiabilityError(f"{rows} assignments exceed the enumeration cap")

    for combo in itertools.product(*(domains[n] for n in order)):
        row = dict(zip(order, combo))

        def lookup(key, row=row):
            if key in row:
                return row[key]
            if key in symbols:
                return key
            raise KeyError(key)

        try:
            if all(E.evaluate(c, lookup) is True for c in cs):
                return True, row
        except E.TypeMismatch:
            continue
    return False, None


def _literals(cs: Iterable[E.Expr]) -> tuple:
    nums, strs = set(), set()
    for c in cs:
        for n in E.walk(c):
            if isinstance(n, E.Lit) and not isinstance(n.value, bool):
                (strs if isinstance(n.value, str) else nums).add(n.value)
    return nums, strs


def domain_for(dtype: DataType | None, nums=(), strs=()) -> list:
    if dtype is None:
        # untyped: cover every literal kind that could appear
        return [False, True] + _numeric_domain(nums, False) + sorted(strs) + [""]
    if dtype.kind == "bool":
        return [False, True]
    if dtype.kind == "enum":
        return list(dtype.values)
    if dtype.numeric:
        dom = _numeric_domain(nums, dtype.kind == "double")
        if dtype.kind == "time":
            dom = [v for v in dom if v >= 0]
        return dom
    if dtype.kind == "tuple":
        return [dtype.zero()]
    return sorted(strs) + ["\x00other"]


def _numeric_domain(nums, fractional: bool) -> list:
    out = {-1, 0, 1}
    for c in nums:
        out.update((c - 1, c, c + 1))
        if fractional:
            out.update((c - 0.5, c + 0.5))
    return sorted(out)


def derive_domains(
    cs: Iterable[E.Expr], types: Mapping[str, DataType], ctx_types: Mapping[str, DataType] | None = None
) -> dict:
    """Finite domains for every variable in ``cs`` (symbolic enum values excluded)."""
    cs = [as_constraint(c) for c in cs]
    ctx_types = ctx_types or {}
    constants = set()
    for t in list(types.values()) + list(ctx_types.values()):
        if t.kind == "enum":
            constants.update(t.values)
    nums, strs = _literals(cs)
    out = {}
    for c in cs:
        for n in E.walk(c):
            if isinstance(n, E.Name) and n.id not in constants:
                out[n.id] = domain_for(types.get(n.id), nums, strs)
            elif isinstance(n, E.CtxRef):
                out["ctx." + n.dim] = domain_for(ctx_types.get(n.dim), nums, strs)
    return out


def enum_constants(*type_maps: Mapping[str, DataType]) -> set:
    out = set()
    for tm in type_maps:
        for t in tm.values():
            if t.kind == "enum":
                out.update(t.values)
    return out


# ------------------------------------------------------------- context rules


def context_rules_hold(ctx: Context, requester: ContextInfo | Mapping[str, Any]) -> bool:
    """True iff every context rule holds for the requester's context.

    Bare identifiers inside context rules are symbolic tag constants. A rule
    over a dimension the requester does not supply is not satisfied.
    """
    return context_rules_report(ctx, requester)[0]


def context_rules_report(ctx: Context, requester) -> tuple:
    tags = requester.tags() if isinstance(requester, ContextInfo) else dict(requester)
    diagnostics = []

    def lookup(key):
        if key.startswith("ctx."):
            return tags[key[4:]]
        return key

    ok = True
    for rule in ctx.rules:
        missing = sorted(d for d in E.ctx_dims(rule) if d not in tags)
        if missing:
            diagnostics.append(f"rule {E.to_text(rule)} needs requester dimension(s) {missing}")
            ok = False
            continue
        try:
            if E.evaluate(rule, lookup) is not True:
                ok = False
        except E.TypeMismatch as exc:
            diagnostics.append(f"rule {E.to_text(rule)}: {exc}")
            ok = False
    for d in diagnostics:
        log.warning(d)
    return ok, diagnostics


# ------------------------------------------------------------------ typing


def infer_kind(e: E.Expr, types: Mapping[str, DataType], ctx_types: Mapping[str, DataType], constants: Mapping[str, DataType]) -> str:
    """Return the kind of ``e`` ("bool", "num", "str", "enum:<T>", "tuple", "any").

    Raises TypeMismatch when ``e`` is ill-typed and KeyError for unknown names.
    """

    def kind_of(t: DataType | None) -> str:
        if t is None:
            return "any"
        if t.kind == "bool":
            return "bool"
        if t.numeric:
            return "num"
        if t.kind == "enum":
            return f"enum:{t.name}"
        if t.kind == "tuple":
            return "tuple"
        return "str"

    def go(node) -> str:
        if isinstance(node, E.Lit):
            v = node.value
            return "bool" if isinstance(v, bool) else "str" if isinstance(v, str) else "num"
        if isinstance(node, E.Name):
            if node.id in types:
                return kind_of(types[node.id])
            if node.id in constants:
                return kind_of(constants[node.id])
            raise KeyError(node.id)
        if isinstance(node, E.CtxRef):
            return kind_of(ctx_types.get(node.dim))
        if isinstance(node, E.Not):
            _need(go(node.operand), "bool", "!")
            return "bool"
        if isinstance(node, E.Call):
            for a in node.args:
                _need(go(a), "num", node.fn)
            return "num"
        if isinstance(node, E.Assign):
            target = go(E.Name(node.target))
            value = go(node.value)
            if not _compatible(target, value):
                raise E.TypeMismatch(f"cannot assign {value} to {node.target} ({target})")
            return "bool"
        a, b = go(node.left), go(node.right)
        if node.op in E.LOGICAL:
            _need(a, "bool", node.op)
            _need(b, "bool", node.op)
            return "bool"
        if node.op in ("==", "!="):
            if not _compatible(a, b):
                raise E.TypeMismatch(f"cannot compare {a} with {b} in {E.to_text(node)}")
            return "bool"
        _need(a, "num", node.op)
        _need(b, "num", node.op)
        return "bool" if node.op in E.COMPARISON else "num"

    return go(e)


def _need(kind: str, want: str, op: str):
    if kind not in (want, "any"):
        raise E.TypeMismatch(f"operator {op!r} needs {want}, got {kind}")


def _compatible(a: str, b: str) -> bool:
    return a == b or "any" in (a, b)


# ----------------------------------------------------------------- service


def _resolves(e, service_names: set, constants: set) -> list:
    return sorted(n for n in E.names(e) if n not in service_names and n not in constants)


def validate_service(s: ConfiguredService) -> list:
    """Return the list of invariant violations of ``s`` (empty when well formed)."""
    out: list = []
    add = lambda kind, msg: out.append(Violation(kind, msg))  # noqa: E731

    seen = set()
    for p in s.params:
        if p.name in seen:
            add("duplicate", f"parameter {p.name!r} declared twice")
        seen.add(p.name)
        if p.direction not in ("input", "output"):
            add("direction", f"parameter {p.name!r} has direction {p.direction!r}")
        stray = E.names(p.constraint) - {p.name} - set(s.enum_values())
        if stray:
            add("parameter-constraint", f"constraint of {p.name!r} references {sorted(stray)}")
    attr_names = set()
    for a in s.attrs:
        if a.name in attr_names:
            add("duplicate", f"attribute {a.name!r} declared twice")
        attr_names.add(a.name)
        if not a.dtype.conforms(a.value):
            add("attribute-type", f"attribute {a.name!r} value {a.value!r} is not {a.dtype}")

    types = s.param_types()
    ctx_types = s.context.info.types()
    constants = s.enum_values()
    names = set(types) | attr_names

    dims = [d for d, _ in s.context.info.entries]
    if len(set(dims)) != len(dims):
        add("context", "a dimension appears more than once in the context information")
    for d, tag in s.context.info.entries:
        t = ctx_types.get(d)
        if t is not None and not t.conforms(tag):
            add("context", f"tag {tag!r} of dimension {d!r} is not {t}")
    for rule in s.context.rules:
        _typecheck(rule, {}, ctx_types, constants, "context-rule", add, bare_names_ok=True)
    if s.context.rules:
        _satisfiable(s.context.rules, {}, ctx_types, constants, "context-conflict", "context rules", add)

    f = s.function
    inputs = {p.name for p in s.input_params()}
    outputs = {p.name for p in s.output_params()}
    extra = [n for n in f.inputs if n not in inputs]
    if extra:
        add("signature", f"function inputs {extra} are not declared input parameters")
    extra = [n for n in f.outputs if n not in outputs]
    if extra:
        add("signature", f"function outputs {extra} are not declared output parameters")
    for c in f.pre:
        bad = sorted(E.names(c) - inputs - set(constants))
        if bad:
            add("precondition", f"{E.to_text(c)} references non-input names {bad}")
        _typecheck(c, types, ctx_types, constants, "precondition", add)
    for c in f.post:
        bad = sorted(E.names(c) - inputs - outputs - set(constants))
        if bad:
            add("postcondition", f"{E.to_text(c)} references unknown names {bad}")
        _typecheck(c, types, ctx_types, constants, "postcondition", add)

    nf = s.nonfunctional
    for label in ("safety_time", "reliability", "availability"):
        v = getattr(nf, label)
        if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 0):
            add("duration", f"{label} must be a non-negative integer, got {v!r}")
    for c in nf.safety_data or ():
        bad = _resolves(c, names, set(constants))
        if bad:
            add("unresolved", f"safety data {E.to_text(c)} references {bad}")
            continue
        _typecheck(c, types, ctx_types, constants, "safety-data", add)
    if nf.price is not None:
        _check_price(s, nf.price, types, constants, add)
    if nf.trust is not None:
        for label, pairs in (("ce", nf.trust.ce), ("re", nf.trust.re)):
            who = [a for a, _ in pairs]
            if len(set(who)) != len(who):
                add("trust", f"{label} has more than one grade for a name")
            for a, g in pairs:
                if isinstance(g, bool) or not isinstance(g, int) or not 1 <= g <= 5:
                    add("trust-range", f"{label} grade {g!r} for {a!r} outside 1..5")

    for rule in s.contract.legal:
        bad = _resolves(rule, names, set(constants))
        if bad:
            add("unresolved", f"legal rule {E.to_text(rule)} references {bad}")
            continue
        _typecheck(rule, types, ctx_types, constants, "legal", add)
    checked = [r for r in s.contract.legal if not is_accumulating(r)]
    if checked and not any(v.kind == "unresolved" for v in out):
        _satisfiable(checked, types, ctx_types, constants, "legal-conflict", "legal rules", add)
    return out


def _typecheck(e, types, ctx_types, constants, kind, add, bare_names_ok=False):
    if bare_names_ok:
        constants = dict(constants)
        for n in E.names(e):
            constants.setdefault(n, None)
    try:
        k = infer_kind(e, types, ctx_types, constants)
    except E.TypeMismatch as exc:
        add(kind, str(exc))
        return
    except KeyError as exc:
        add("unresolved", f"{kind} {E.to_text(e)} references unknown name {exc.args[0]!r}")
        return
    if k not in ("bool", "any"):
        add(kind, f"{E.to_text(e)} is not a boolean constraint")


def _satisfiable(rules, types, ctx_types, constants, kind, label, add):
    domains = derive_domains(rules, types, ctx_types)
    symbols = set(constants)
    for r in rules:
        symbols.update(n for n in E.names(r) if n not in types)
    try:
        ok, _ = constraints_jointly_satisfiable(rules, domains, symbols)
    except SatisfiabilityError as exc:
        add(kind, f"cannot decide {label}: {exc}")
        return
    if not ok:
        add(kind, f"{label} conflict: " + ", ".join(E.to_text(r) for r in rules))


def _check_price(s, price, types, constants, add):
    bad = _resolves(price.amount, set(types), set(constants))
    if bad:
        add("unresolved", f"price amount references {bad}")
        return
    if price.per is not None and price.per not in types:
        add("unresolved", f"price quantity parameter {price.per!r} is not declared")
    refs = sorted(E.names(price.amount))
    domains = {}
    nums, _ = _literals([price.amount] + [s.param(n).constraint for n in refs])
    for n in refs:
        domains[n] = [v for v in domain_for(types[n], nums) if _param_allows(s, n, v)]
    for combo in itertools.product(*(domains[n] for n in refs)):
        row = dict(zip(refs, combo))
        try:
            value = E.evaluate(price.amount, row.__getitem__)
        except E.ExprError as exc:
            add("price", f"price amount {E.to_text(price.amount)}: {exc}")
            return
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            add("price", f"price amount {E.to_text(price.amount)} is not numeric")
            return
        if value < 0:
            add("price", f"price amount {E.to_text(price.amount)} is negative at {row}")
            return


def _param_allows(s: ConfiguredService, name: str, value) -> bool:
    c = s.param(name).constraint
    if c == E.TRUE:
        return True
    consts = set(s.enum_values())

    def lookup(key):
        if key == name:
            return value
        if key in consts:
            return key
        raise KeyError(key)

    try:
        return E.evaluate(c, lookup) is True
    except E.ExprError:
        return False
