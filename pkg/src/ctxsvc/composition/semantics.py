"""Contract-level semantics of service composition.

Sequential composition merges every part of two services (parameters,
attributes, context, function, nonfunctional guarantees, trust, legal
issues). Other constructs are given meaning by flattening the expression
into sequential flows, composing each flow as a left fold, and taking the
worst case across flows for the composite guarantees.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field, replace
from functools import reduce
from typing import Any, Callable, Mapping, Optional

from .. import expr as E
from ..flatten import Flow, flatten
from ..model import (
    ONE_TIME,
    ConfiguredService,
    Context,
    ContextInfo,
    Contract,
    Environment,
    Nonfunctional,
    Price,
    ProviderTrust,
    ServiceFunction,
    eval_constraint,
    is_accumulating,
)
from ..trust import AGGREGATORS, LOGICS, aggregate_trust, partition
from ..validate import SatisfiabilityError, constraints_jointly_satisfiable, derive_domains
from .expression import CompositionExpr, service_refs

log = logging.getLogger(__name__)

CONCAT = "⌢"  # the naming-convention operator for composite names
PRICING_MODES = ("normal", "promotional", "special_sale")


class CompositionError(Exception):
    pass


@dataclass(frozen=True)
class SeqOptions:
    pricing_mode: str = "normal"
    trust_logic: str = "b_requires_a"
    trust_aggregator: str = "glb"
    po_a_observable: bool = True
    b_requires_more: bool = True
    packaged_trust: Optional[ProviderTrust] = None
    seed: int = 0
    post_rules_hook: Optional[Callable[[Context], tuple]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.pricing_mode not in PRICING_MODES:
            raise ValueError(f"pricing_mode must be one of {PRICING_MODES}")
        if self.trust_logic not in LOGICS:
            raise ValueError(f"trust_logic must be one of {LOGICS}")
        if self.trust_aggregator not in AGGREGATORS:
            raise ValueError(f"trust_aggregator must be one of {AGGREGATORS}")
        if self.trust_logic == "packaged" and self.packaged_trust is None:
            raise ValueError("packaged trust logic needs packaged_trust sets")


def _union(*seqs) -> tuple:
    out = []
    for seq in seqs:
        for x in seq or ():
            if x not in out:
                out.append(x)
    return tuple(out)


def _opt_union(a, b):
    if a is None and b is None:
        return None
    return _union(a, b)


def _union_present(seqs):
    present = [x for x in seqs if x is not None]
    return _union(*present) if present else None


def _opt_sum(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _opt_min(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


# ---------------------------------------------------------------- context


def merge_context(a: Context, b: Context, post_rules_hook=None) -> Context:
    """Smallest closure of two provision contexts.

    Rules: the rules still true after providing A (``post_rules_hook``, identity
    by default) united with B's. Information: dimension-wise union where B's tag
    wins on a shared dimension with a differing tag.
    """
    rules_a = tuple(post_rules_hook(a)) if post_rules_hook else a.rules
    types_a, types_b = a.info.types(), b.info.types()
    for dim in set(types_a) & set(types_b):
        if types_a[dim] != types_b[dim]:
            raise CompositionError(f"context dimension {dim!r} typed {types_a[dim]} and {types_b[dim]}")
    tags_b = b.info.tags()
    entries = []
    for dim, tag in a.info.entries:
        if dim in tags_b and tags_b[dim] != tag:
            log.warning("context dimension %s: %r replaced by %r", dim, tag, tags_b[dim])
            tag = tags_b[dim]
        entries.append((dim, tag))
    seen = {d for d, _ in entries}
    entries += [(d, t) for d, t in b.info.entries if d not in seen]
    typing = dict(a.info.typing)
    typing.update(b.info.typing)
    return Context(_union(rules_a, b.rules), ContextInfo(tuple(entries), tuple(typing.items())))


# ------------------------------------------------------------------ price


def _per_unit_amount(p: Price) -> E.Expr:
    if p.unit == ONE_TIME:
        return p.amount
    if p.per is None:
        raise CompositionError(f"price per {p.unit!r} has no usage parameter to convert it to {ONE_TIME}")
    return E.BinOp("*", p.amount, E.Name(p.per))


def combine_price(pa: Optional[Price], pb: Optional[Price], mode: str = "normal") -> Optional[Price]:
    """Price of ``A >> B``: sum (normal), max (promotional) or min (special sale).

    Prices in different units are first converted to one-time amounts by
    multiplying per-unit rates with their usage parameter.
    """
    if pa is None:
        return pb
    if pb is None:
        return pa
    if pa.currency != pb.currency:
        raise CompositionError(f"currency mismatch: {pa.currency} vs {pb.currency}")
    if mode not in PRICING_MODES:
        raise CompositionError(f"unknown pricing mode {mode!r}")
    if pa.unit == pb.unit:
        a, b, unit, per = pa.amount, pb.amount, pa.unit, pa.per if pa.per == pb.per else None
    else:
        a, b, unit, per = _per_unit_amount(pa), _per_unit_amount(pb), ONE_TIME, None
    if mode == "normal":
        amount = E.BinOp("+", a, b)
    else:
        amount = E.Call("max" if mode == "promotional" else "min", (a, b))
    if E.is_constant(amount):
        amount = E.simplify(amount)
    return Price(amount, pa.currency, unit, per)


# ------------------------------------------------------------- sequential


def _params(a: ConfiguredService, b: ConfiguredService) -> tuple:
    out_a = {p.name for p in a.output_params()}
    chosen = a.input_params() + [p for p in b.input_params() if p.name not in out_a]
    chosen += a.output_params() + b.output_params()
    by_name: dict = {}
    for p in chosen:
        prev = by_name.get(p.name)
        if prev is None:
            by_name[p.name] = p
        elif prev.dtype != p.dtype:
            raise CompositionError(f"parameter {p.name!r} typed {prev.dtype} and {p.dtype}")
    return tuple(by_name.values())


def _attrs(a: ConfiguredService, b: ConfiguredService) -> tuple:
    out = list(a.attrs)
    names = {x.name for x in out}
    for x in b.attrs:
        if x.name in names:
            if x not in out:
                log.warning("attribute %s differs between operands; keeping the first", x.name)
            continue
        out.append(x)
    return tuple(out)


def _check_legal(s: ConfiguredService):
    rules = [r for r in s.contract.legal if not is_accumulating(r)]
    if not rules:
        return
    types = s.param_types()
    try:
        ok, _ = constraints_jointly_satisfiable(
            rules, derive_domains(rules, types, s.context.info.types()), s.enum_values()
        )
    except SatisfiabilityError:
        return
    if not ok:
        raise CompositionError("legal issues conflict: " + ", ".join(E.to_text(r) for r in rules))


def seq_compose(a: ConfiguredService, b: ConfiguredService, opts: SeqOptions = SeqOptions()) -> ConfiguredService:
    """Sequential composition ``a >> b``."""
    fa, fb = a.function, b.function
    outputs_a = set(fa.outputs)
    pre = fa.pre + tuple(c for c in fb.pre if c not in fa.post) if opts.b_requires_more else fa.pre
    observable = opts.po_a_observable and fa.post_observable
    post = _union(fa.post, fb.post) if observable else fb.post
    function = ServiceFunction(
        name=fa.name + CONCAT + fb.name,
        inputs=_union(fa.inputs, [n for n in fb.inputs if n not in outputs_a]),
        address=_union(fa.address, fb.address),
        result_name=fa.result_name + CONCAT + fb.result_name,
        outputs=_union(fa.outputs, fb.outputs),
        pre=_union(pre),
        post=post,
        post_observable=fb.post_observable,
    )
    na, nb = a.nonfunctional, b.nonfunctional
    nonfunctional = Nonfunctional(
        safety_time=_opt_sum(na.safety_time, nb.safety_time),
        safety_data=_opt_union(na.safety_data, nb.safety_data),
        security=_opt_union(na.security, nb.security),
        reliability=_opt_min(na.reliability, nb.reliability),
        availability=_opt_sum(na.availability, nb.availability),
        price=combine_price(na.price, nb.price, opts.pricing_mode),
        trust=aggregate_trust(
            na.trust, nb.trust, opts.trust_logic, opts.trust_aggregator, opts.packaged_trust, opts.seed
        ),
    )
    out = ConfiguredService(
        name=a.name + CONCAT + b.name,
        params=_params(a, b),
        attrs=_attrs(a, b),
        context=merge_context(a.context, b.context, opts.post_rules_hook),
        contract=Contract(function, nonfunctional, _union(a.contract.legal, b.contract.legal)),
    )
    _check_legal(out)
    return out


def compose_along_flow(flow: Flow, catalog: Mapping[str, ConfiguredService], opts: SeqOptions = SeqOptions()) -> ConfiguredService:
    """Left fold of ``seq_compose`` over a flow; flow guards become preconditions."""
    if not flow.steps:
        raise CompositionError("cannot compose an empty flow")
    try:
        services = [catalog[s.service] for s in flow.steps]
    except KeyError as exc:
        raise CompositionError(f"unknown service {exc.args[0]!r}") from None
    out = reduce(lambda x, y: seq_compose(x, y, opts), services)
    guards = flow.guards()
    if guards:
        out = out.with_contract(function=_with_pre(out.function, _union(guards, out.function.pre)))
    return out


def _with_pre(f: ServiceFunction, pre: tuple) -> ServiceFunction:
    return replace(f, pre=pre)


# ---------------------------------------------------------------- compose


@dataclass(frozen=True)
class CompositionResult:
    services: tuple
    flow: CompositionExpr
    composite: ConfiguredService
    per_flow: tuple  # ((Flow, ConfiguredService), ...)

    @property
    def flows(self) -> list:
        return [f for f, _ in self.per_flow]


def price_value(price: Price, service: ConfiguredService, bindings: Mapping[str, Any]) -> float:
    env = Environment.for_service(service, bindings)
    try:
        value = eval_constraint(price.amount, env)
    except E.ExprError as exc:
        raise CompositionError(f"price {E.to_text(price.amount)} not evaluable: {exc}") from None
    return value


def compose(
    expr: CompositionExpr,
    catalog: Mapping[str, ConfiguredService],
    opts: SeqOptions = SeqOptions(),
    unroll: int = 1,
    bindings: Optional[Mapping[str, Any]] = None,
) -> CompositionResult:
    """Flatten ``expr``, compose every flow and build the worst-case composite."""
    flows = flatten(expr, unroll, catalog)
    if not flows:
        raise CompositionError("the expression denotes no flow")
    per_flow = tuple((f, compose_along_flow(f, catalog, opts)) for f in flows)
    names = []
    for n in service_refs(expr):
        if n not in names:
            names.append(n)
    services = tuple(catalog[n] for n in names)
    if len(per_flow) == 1:
        composite = per_flow[0][1]
    else:
        composite = _worst_case(per_flow, services, opts, bindings or {})
    return CompositionResult(services, expr, composite, per_flow)


def _worst_case(per_flow, services, opts: SeqOptions, bindings) -> ConfiguredService:
    composites = [c for _, c in per_flow]
    params: dict = {}
    for c in composites:
        for p in c.params:
            params.setdefault(p.name, p)
    attrs: list = []
    for c in composites:
        attrs.extend(a for a in c.attrs if a.name not in {x.name for x in attrs})
    context = reduce(lambda x, y: merge_context(x, y), [c.context for c in composites])

    pre = []
    for f, c in per_flow:
        guards = f.guards()
        pre.extend(p for p in c.function.pre if p not in guards and p not in pre)
    post = [p for p in composites[0].function.post if all(p in c.function.post for c in composites[1:])]
    fn_names = _union([s.function.name for s in services])
    result_names = _union([s.function.result_name for s in services])
    function = ServiceFunction(
        name=CONCAT.join(fn_names),
        inputs=_union(*[c.function.inputs for c in composites]),
        address=_union(*[c.function.address for c in composites]),
        result_name=CONCAT.join(result_names),
        outputs=_union(*[c.function.outputs for c in composites]),
        pre=tuple(pre),
        post=tuple(post),
        post_observable=all(c.function.post_observable for c in composites),
    )

    nfs = [c.nonfunctional for c in composites]

    def worst(attr, pick):
        values = [getattr(n, attr) for n in nfs if getattr(n, attr) is not None]
        return pick(values) if values else None

    price = None
    priced = [(c, c.nonfunctional.price) for c in composites if c.nonfunctional.price is not None]
    if priced:
        currencies = {p.currency for _, p in priced}
        if len(currencies) > 1:
            raise CompositionError(f"flows priced in different currencies {sorted(currencies)}")
        best = None
        for c, p in priced:
            v = price_value(p, c, bindings)
            if best is None or v > best[0]:
                best = (v, p)
        price = best[1]
    trust = None
    trusts = [n.trust for n in nfs if n.trust is not None]
    if trusts:
        trust = reduce(lambda x, y: _merge_alternatives(x, y, opts), trusts)

    nonfunctional = Nonfunctional(
        safety_time=worst("safety_time", max),
        safety_data=_union_present([n.safety_data for n in nfs]),
        security=_union_present([n.security for n in nfs]),
        reliability=worst("reliability", min),
        availability=worst("availability", max),
        price=price,
        trust=trust,
    )
    return ConfiguredService(
        name=CONCAT.join(s.name for s in services),
        params=tuple(params.values()),
        attrs=tuple(attrs),
        context=context,
        contract=Contract(function, nonfunctional, _union(*[c.contract.legal for c in composites])),
    )


def _merge_alternatives(x: ProviderTrust, y: ProviderTrust, opts: SeqOptions) -> ProviderTrust:
    rng = random.Random(opts.seed)

    def merge(a, b):
        only_a, only_b, shared = partition(dict(a), dict(b), opts.trust_aggregator, rng)
        out = {**only_a, **shared, **only_b}
        order = [k for k, _ in a] + [k for k, _ in b if k not in dict(a)]
        return tuple((k, out[k]) for k in order)

    return ProviderTrust(merge(x.ce, y.ce), x.pg and y.pg, merge(x.re, y.re))
