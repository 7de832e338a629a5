"""ConfiguredService data model.

A configured service bundles parameters, attributes, a provision context and
a contract (function, nonfunctional guarantees, legal issues). All values are
immutable; collections are tuples kept in declaration order so that
serialization and generated artifacts are deterministic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional

from . import expr as E

SCALAR_KINDS = ("bool", "int", "double", "string", "time", "currency", "unit")


class ModelError(Exception):
    pass


class UnknownType(ModelError):
    pass


@dataclass(frozen=True)
class DataType:
    kind: str
    name: Optional[str] = None  # enum type name
    values: tuple = ()  # enum values
    elements: tuple = ()  # tuple component types

    def __post_init__(self):
        if self.kind == "enum":
            if not self.values:
                raise ModelError(f"enum {self.name} has no values")
            if len(set(self.values)) != len(self.values):
                raise ModelError(f"enum {self.name} has duplicate values")
        elif self.kind == "tuple":
            if not self.elements:
                raise ModelError("tuple type needs at least one element")
        elif self.kind not in SCALAR_KINDS:
            raise UnknownType(f"unknown type {self.kind!r}")

    @property
    def numeric(self) -> bool:
        return self.kind in ("int", "double", "time")

    def conforms(self, value: Any) -> bool:
        k = self.kind
        if k == "bool":
            return isinstance(value, bool)
        if isinstance(value, bool):
            return False
        if k in ("int", "time"):
            return isinstance(value, int) and (k == "int" or value >= 0)
        if k == "double":
            return isinstance(value, (int, float))
        if k in ("string", "currency", "unit"):
            return isinstance(value, str)
        if k == "enum":
            return value in self.values
        if k == "tuple":
            return (
                isinstance(value, tuple)
                and len(value) == len(self.elements)
                and all(t.conforms(v) for t, v in zip(self.elements, value))
            )
        return False

    def zero(self) -> Any:
        if self.kind == "bool":
            return False
        if self.kind in ("int", "time"):
            return 0
        if self.kind == "double":
            return 0.0
        if self.kind == "enum":
            return self.values[0]
        if self.kind == "tuple":
            return tuple(t.zero() for t in self.elements)
        return ""

    def __str__(self) -> str:
        if self.kind == "enum":
            return f"enum({self.name}: {', '.join(self.values)})"
        if self.kind == "tuple":
            return f"tuple({', '.join(str(t) for t in self.elements)})"
        return self.kind


_ENUM_RE = re.compile(r"^enum\(\s*([A-Za-z_]\w*)\s*:\s*(.*)\)$")
_IDENT_RE = re.compile(r"^[A-Za-z_]\w*$")


def parse_type(text: str) -> DataType:
    """Parse ``bool``, ``int``, ``enum(Name: a, b)``, ``tuple(string, string)``..."""
    text = text.strip()
    if text in SCALAR_KINDS:
        return DataType(text)
    m = _ENUM_RE.match(text)
    if m:
        values = tuple(v.strip() for v in m.group(2).split(",") if v.strip())
        bad = [v for v in values if not _IDENT_RE.match(v)]
        if bad:
            raise UnknownType(f"enum values must be identifiers: {bad}")
        return DataType("enum", m.group(1), values)
    if text.startswith("tuple(") and text.endswith(")"):
        parts = [p for p in _split_top(text[6:-1]) if p.strip()]
        return DataType("tuple", elements=tuple(parse_type(p) for p in parts))
    raise UnknownType(f"unknown type {text!r}")


def _split_top(text: str) -> list:
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur += ch
    parts.append(cur)
    return parts


@dataclass(frozen=True)
class Parameter:
    name: str
    dtype: DataType
    direction: str  # "input" | "output"
    constraint: E.Expr = E.TRUE


@dataclass(frozen=True)
class Attribute:
    name: str
    dtype: DataType
    value: Any


@dataclass(frozen=True)
class ContextInfo:
    """Dimension/tag pairs plus the dimension typing."""

    entries: tuple = ()  # ((dimension, tag), ...)
    typing: tuple = ()  # ((dimension, DataType), ...)

    @classmethod
    def of(cls, tags: Mapping[str, Any], typing: Mapping[str, DataType] | None = None):
        return cls(tuple(tags.items()), tuple((typing or {}).items()))

    def tags(self) -> dict:
        return dict(self.entries)

    def types(self) -> dict:
        return dict(self.typing)

    def dims(self) -> list:
        return [d for d, _ in self.entries]


@dataclass(frozen=True)
class Context:
    rules: tuple = ()
    info: ContextInfo = field(default_factory=ContextInfo)


@dataclass(frozen=True)
class ServiceFunction:
    name: str
    inputs: tuple = ()
    address: tuple = ()
    result_name: str = ""
    outputs: tuple = ()
    pre: tuple = ()
    post: tuple = ()
    post_observable: bool = True


@dataclass(frozen=True)
class Price:
    """Price ``amount`` in ``currency`` per ``unit``.

    ``per`` names the parameter counting how many units are consumed
    (e.g. ``numberOfHours`` for an hourly rate). It is needed to lift a
    per-unit rate into a one-time amount when units differ in a composition.
    """

    amount: E.Expr
    currency: str
    unit: str
    per: Optional[str] = None


ONE_TIME = "oneTime"


@dataclass(frozen=True)
class ProviderTrust:
    ce: tuple = ()  # ((client, grade), ...)
    pg: bool = False
    re: tuple = ()  # ((organization, grade), ...)


@dataclass(frozen=True)
class Nonfunctional:
    safety_time: Optional[int] = None
    safety_data: Optional[tuple] = None
    security: Optional[tuple] = None
    reliability: Optional[int] = None
    availability: Optional[int] = None
    price: Optional[Price] = None
    trust: Optional[ProviderTrust] = None


@dataclass(frozen=True)
class Contract:
    function: ServiceFunction
    nonfunctional: Nonfunctional = field(default_factory=Nonfunctional)
    legal: tuple = ()


@dataclass(frozen=True)
class ConfiguredService:
    name: str
    params: tuple = ()
    attrs: tuple = ()
    context: Context = field(default_factory=Context)
    contract: Contract = field(default_factory=lambda: Contract(ServiceFunction("")))

    @property
    def function(self) -> ServiceFunction:
        return self.contract.function

    @property
    def nonfunctional(self) -> Nonfunctional:
        return self.contract.nonfunctional

    def param(self, name: str) -> Parameter:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)

    def param_types(self) -> dict:
        return {p.name: p.dtype for p in self.params}

    def input_params(self) -> list:
        return [p for p in self.params if p.direction == "input"]

    def output_params(self) -> list:
        return [p for p in self.params if p.direction == "output"]

    def enum_values(self) -> dict:
        """Every enum value name visible in this service, mapped to its type."""
        out = {}
        types = [p.dtype for p in self.params] + [a.dtype for a in self.attrs]
        types += [t for _, t in self.context.info.typing]
        for t in types:
            for v in _enum_values(t):
                out.setdefault(v, t)
        return out

    def with_contract(self, **changes) -> "ConfiguredService":
        return replace(self, contract=replace(self.contract, **changes))


def _enum_values(t: DataType):
    if t.kind == "enum":
        yield from t.values
    elif t.kind == "tuple":
        for el in t.elements:
            yield from _enum_values(el)


def is_effect(rule: E.Expr) -> bool:
    return isinstance(rule, E.Assign)


def is_accumulating(rule: E.Expr) -> bool:
    """``x := x + 300``: an effect whose value depends on its own target."""
    return isinstance(rule, E.Assign) and rule.target in E.names(rule.value)


def as_constraint(rule: E.Expr) -> E.Expr:
    """Read an effect ``x := v`` as the fact ``x == v`` it establishes."""
    if isinstance(rule, E.Assign):
        return E.BinOp("==", E.Name(rule.target), rule.value)
    return rule


@dataclass(frozen=True)
class Environment:
    """Evaluation context: parameter bindings, requester context, enum constants."""

    bindings: Mapping[str, Any] = field(default_factory=dict)
    requester_context: ContextInfo = field(default_factory=ContextInfo)
    constants: frozenset = frozenset()

    @classmethod
    def for_service(cls, service: ConfiguredService, bindings=None, requester=None):
        if isinstance(requester, Mapping):
            requester = ContextInfo.of(requester)
        return cls(dict(bindings or {}), requester or ContextInfo(), frozenset(service.enum_values()))

    def lookup(self, key: str) -> Any:
        if key.startswith("ctx."):
            tags = self.requester_context.tags()
            return tags[key[4:]]
        if key in self.bindings:
            return self.bindings[key]
        if key in self.constants:
            return key
        raise KeyError(key)


def eval_constraint(e: E.Expr, env: Environment) -> Any:
    """Evaluate a constraint or arithmetic expression under ``env``.

    Raises UnboundName / TypeMismatch from the expression module.
    """
    return E.evaluate(e, env.lookup)
