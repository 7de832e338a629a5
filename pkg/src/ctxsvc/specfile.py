"""Service specification documents (``.svc`` files).

A document is YAML whose nesting mirrors the service tuple one-to-one::

    service: RepairShop
    parameters:
    - {name: CarBroken, type: bool, direction: input}
    attributes: []
    context:
      rules: [ctx.membership==caa]
      info: {Location: [Montreal, Canada]}
      typing: {membership: 'enum(Membership: caa, aaa)', Location: 'tuple(string, string)'}
    contract:
      function: {name: ..., inputs: [...], address: ..., result_name: ...,
                 outputs: [...], pre: [...], post: [...], post_observable: true}
      nonfunctional: {safety_time: 5, price: {amount: '60', currency: dollar, unit: hour, per: numberOfHours}}
      legal: [deposit:=300, CarType==toyota]

A file may hold several documents separated by ``---``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml

from . import expr as E
from .model import (
    Attribute,
    ConfiguredService,
    Context,
    ContextInfo,
    Contract,
    ModelError,
    Nonfunctional,
    Parameter,
    Price,
    ProviderTrust,
    ServiceFunction,
    UnknownType,
    parse_type,
)


class SpecError(Exception):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)


class SpecSyntaxError(SpecError):
    pass


class UnknownTypeError(SpecError):
    pass


class DuplicateNameError(SpecError):
    pass


class _Str(str):
    line: int | None = None
    col: int | None = None


class _Loader(yaml.SafeLoader):
    pass


def _construct_str(loader, node):
    s = _Str(loader.construct_scalar(node))
    s.line = node.start_mark.line + 1
    s.col = node.start_mark.column + 1
    return s


_Loader.add_constructor("tag:yaml.org,2002:str", _construct_str)


def _pos(value) -> tuple:
    return getattr(value, "line", None), getattr(value, "col", None)


def _plain(value):
    """Strip position info; YAML lists become tuples."""
    if isinstance(value, _Str):
        return str(value)
    if isinstance(value, list):
        return tuple(_plain(v) for v in value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return value


# ----------------------------------------------------------------- parsing


def _expr(text, where: str, allow_assign: bool = False) -> E.Expr:
    if isinstance(text, bool):
        return E.Lit(text)
    if isinstance(text, (int, float)):
        return E.Lit(text)
    if not isinstance(text, str):
        raise SpecSyntaxError(f"{where}: expected an expression, got {text!r}")
    try:
        return E.parse(text, allow_assign=allow_assign)
    except E.ExprSyntaxError as exc:
        line, col = _pos(text)
        if col is not None:
            col += exc.pos
        raise SpecSyntaxError(f"{where}: {exc.message} in {str(text)!r}", line, col) from None


def _type(text, where: str):
    if not isinstance(text, str):
        raise UnknownTypeError(f"{where}: type must be a string, got {text!r}")
    try:
        return parse_type(text)
    except (UnknownType, ModelError) as exc:
        raise UnknownTypeError(f"{where}: {exc}", *_pos(text)) from None


def _mapping(value, where: str, allowed: tuple) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise SpecSyntaxError(f"{where}: expected a mapping")
    unknown = [k for k in value if k not in allowed]
    if unknown:
        raise SpecSyntaxError(f"{where}: unknown key(s) {sorted(unknown)}", *_pos(unknown[0]))
    return value


def _list(value, where: str) -> list:
    if value is None:
        return []
    if not isinstance(value, list):
        raise SpecSyntaxError(f"{where}: expected a list")
    return value


def _names(value, where: str) -> tuple:
    items = _list(value, where)
    out = tuple(str(v) for v in items)
    if len(set(out)) != len(out):
        raise DuplicateNameError(f"{where}: duplicate name in {list(out)}")
    return out


def _service_from_doc(doc) -> ConfiguredService:
    doc = _mapping(doc, "document", ("service", "parameters", "attributes", "context", "contract"))
    if "service" not in doc:
        raise SpecSyntaxError("document: missing 'service' name")
    name = str(doc["service"])

    params = []
    seen = set()
    for i, p in enumerate(_list(doc.get("parameters"), "parameters")):
        where = f"parameters[{i}]"
        p = _mapping(p, where, ("name", "type", "direction", "constraint"))
        for key in ("name", "type", "direction"):
            if key not in p:
                raise SpecSyntaxError(f"{where}: missing {key!r}")
        pname = str(p["name"])
        if pname in seen:
            raise DuplicateNameError(f"duplicate parameter name {pname!r}", *_pos(p["name"]))
        seen.add(pname)
        if p["direction"] not in ("input", "output"):
            raise SpecSyntaxError(f"{where}: direction must be input or output", *_pos(p["direction"]))
        constraint = _expr(p["constraint"], f"{where}.constraint") if "constraint" in p else E.TRUE
        params.append(Parameter(pname, _type(p["type"], f"{where}.type"), str(p["direction"]), constraint))

    attrs = []
    seen = set()
    for i, a in enumerate(_list(doc.get("attributes"), "attributes")):
        where = f"attributes[{i}]"
        a = _mapping(a, where, ("name", "type", "value"))
        if "name" not in a or "type" not in a or "value" not in a:
            raise SpecSyntaxError(f"{where}: attributes need name, type and value")
        aname = str(a["name"])
        if aname in seen:
            raise DuplicateNameError(f"duplicate attribute name {aname!r}", *_pos(a["name"]))
        seen.add(aname)
        attrs.append(Attribute(aname, _type(a["type"], f"{where}.type"), _plain(a["value"])))

    ctx = _mapping(doc.get("context"), "context", ("rules", "info", "typing"))
    rules = tuple(_expr(r, f"context.rules[{i}]") for i, r in enumerate(_list(ctx.get("rules"), "context.rules")))
    info = _mapping(ctx.get("info"), "context.info", tuple(ctx.get("info") or ()))
    typing = _mapping(ctx.get("typing"), "context.typing", tuple(ctx.get("typing") or ()))
    context = Context(
        rules,
        ContextInfo(
            tuple((str(k), _plain(v)) for k, v in info.items()),
            tuple((str(k), _type(v, f"context.typing.{k}")) for k, v in typing.items()),
        ),
    )

    contract = _mapping(doc.get("contract"), "contract", ("function", "nonfunctional", "legal"))
    if "function" not in contract:
        raise SpecSyntaxError("contract: missing 'function'")
    fn = _mapping(
        contract["function"],
        "contract.function",
        ("name", "inputs", "address", "result_name", "outputs", "pre", "post", "post_observable"),
    )
    address = fn.get("address", ())
    address = (str(address),) if isinstance(address, str) else tuple(str(a) for a in _list(address, "address"))
    function = ServiceFunction(
        name=str(fn.get("name", name)),
        inputs=_names(fn.get("inputs"), "contract.function.inputs"),
        address=address,
        result_name=str(fn.get("result_name", "")),
        outputs=_names(fn.get("outputs"), "contract.function.outputs"),
        pre=tuple(_expr(c, f"contract.function.pre[{i}]") for i, c in enumerate(_list(fn.get("pre"), "pre"))),
        post=tuple(_expr(c, f"contract.function.post[{i}]") for i, c in enumerate(_list(fn.get("post"), "post"))),
        post_observable=bool(fn.get("post_observable", True)),
    )

    nf = _mapping(
        contract.get("nonfunctional"),
        "contract.nonfunctional",
        ("safety_time", "safety_data", "security", "reliability", "availability", "price", "trust"),
    )
    price = None
    if "price" in nf:
        pr = _mapping(nf["price"], "price", ("amount", "currency", "unit", "per"))
        for key in ("amount", "currency", "unit"):
            if key not in pr:
                raise SpecSyntaxError(f"price: missing {key!r}")
        price = Price(
            _expr(pr["amount"], "price.amount"),
            str(pr["currency"]),
            str(pr["unit"]),
            str(pr["per"]) if pr.get("per") is not None else None,
        )
    trust = None
    if "trust" in nf:
        tr = _mapping(nf["trust"], "trust", ("ce", "pg", "re"))
        trust = ProviderTrust(_grades(tr.get("ce"), "trust.ce"), bool(tr.get("pg", False)), _grades(tr.get("re"), "trust.re"))
    nonfunctional = Nonfunctional(
        safety_time=nf.get("safety_time"),
        safety_data=(
            tuple(_expr(c, f"safety_data[{i}]") for i, c in enumerate(_list(nf["safety_data"], "safety_data")))
            if "safety_data" in nf
            else None
        ),
        security=tuple(str(x) for x in _list(nf["security"], "security")) if "security" in nf else None,
        reliability=nf.get("reliability"),
        availability=nf.get("availability"),
        price=price,
        trust=trust,
    )
    legal = tuple(
        _expr(r, f"contract.legal[{i}]", allow_assign=True) for i, r in enumerate(_list(contract.get("legal"), "legal"))
    )
    return ConfiguredService(name, tuple(params), tuple(attrs), context, Contract(function, nonfunctional, legal))


def _grades(value, where) -> tuple:
    out = []
    for i, pair in enumerate(_list(value, where)):
        if not isinstance(pair, list) or len(pair) != 2:
            raise SpecSyntaxError(f"{where}[{i}]: expected [name, grade]")
        out.append((str(pair[0]), pair[1]))
    return tuple(out)


def parse_service_specs(text: str) -> list:
    """Parse every service document in ``text``."""
    try:
        docs = [d for d in yaml.load_all(text, Loader=_Loader) if d is not None]
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise SpecSyntaxError(
            str(exc.problem or exc), mark.line + 1 if mark else None, mark.column + 1 if mark else None
        ) from None
    return [_service_from_doc(d) for d in docs]


def parse_service_spec(text: str) -> ConfiguredService:
    services = parse_service_specs(text)
    if len(services) != 1:
        raise SpecSyntaxError(f"expected exactly one service document, found {len(services)}")
    return services[0]


def load_catalog(paths) -> dict:
    """Load services from files or directories of ``*.svc`` files, keyed by name."""
    catalog: dict = {}
    for path in paths:
        path = Path(path)
        files = sorted(path.glob("*.svc")) if path.is_dir() else [path]
        for f in files:
            for s in parse_service_specs(f.read_text(encoding="utf-8")):
                if s.name in catalog:
                    raise DuplicateNameError(f"service {s.name!r} defined twice (in {f})")
                catalog[s.name] = s
    return catalog


# ----------------------------------------------------------- serialization


def _yaml_value(v):
    if isinstance(v, tuple):
        return [_yaml_value(x) for x in v]
    return v


def _service_doc(s: ConfiguredService) -> dict:
    text = E.to_text
    doc: dict[str, Any] = {"service": s.name}
    params = []
    for p in s.params:
        entry = {"name": p.name, "type": str(p.dtype), "direction": p.direction}
        if p.constraint != E.TRUE:
            entry["constraint"] = text(p.constraint)
        params.append(entry)
    doc["parameters"] = params
    doc["attributes"] = [{"name": a.name, "type": str(a.dtype), "value": _yaml_value(a.value)} for a in s.attrs]
    ctx = {"rules": [text(r) for r in s.context.rules], "info": {d: _yaml_value(t) for d, t in s.context.info.entries}}
    if s.context.info.typing:
        ctx["typing"] = {d: str(t) for d, t in s.context.info.typing}
    doc["context"] = ctx
    f = s.function
    function = {
        "name": f.name,
        "inputs": list(f.inputs),
        "address": f.address[0] if len(f.address) == 1 else list(f.address),
        "result_name": f.result_name,
        "outputs": list(f.outputs),
        "pre": [text(c) for c in f.pre],
        "post": [text(c) for c in f.post],
        "post_observable": f.post_observable,
    }
    nf = s.nonfunctional
    nonfunctional: dict[str, Any] = {}
    if nf.safety_time is not None:
        nonfunctional["safety_time"] = nf.safety_time
    if nf.safety_data is not None:
        nonfunctional["safety_data"] = [text(c) for c in nf.safety_data]
    if nf.security is not None:
        nonfunctional["security"] = list(nf.security)
    if nf.reliability is not None:
        nonfunctional["reliability"] = nf.reliability
    if nf.availability is not None:
        nonfunctional["availability"] = nf.availability
    if nf.price is not None:
        price = {"amount": text(nf.price.amount), "currency": nf.price.currency, "unit": nf.price.unit}
        if nf.price.per is not None:
            price["per"] = nf.price.per
        nonfunctional["price"] = price
    if nf.trust is not None:
        nonfunctional["trust"] = {
            "ce": [[a, g] for a, g in nf.trust.ce],
            "pg": nf.trust.pg,
            "re": [[a, g] for a, g in nf.trust.re],
        }
    doc["contract"] = {
        "function": function,
        "nonfunctional": nonfunctional,
        "legal": [text(r) for r in s.contract.legal],
    }
    return doc


def serialize_service(s: ConfiguredService) -> str:
    """Canonical document text; byte-stable for equal services."""
    return yaml.safe_dump(
        _service_doc(s), sort_keys=False, allow_unicode=True, default_flow_style=False, width=4096
    )


def serialize_services(services) -> str:
    return "---\n".join(serialize_service(s) for s in services)
