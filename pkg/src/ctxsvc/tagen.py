"""Timed-automata generation.

Turns a composition into a network of automata: one two-location template per
participating service, one main template ``M`` with a path per flattened flow,
global declarations, and the verification query suite.

Labels (guards, updates, invariants) are kept as expression trees so the
checker evaluates exactly what the exporter prints. Names in the generated
model follow fixed rules:

* availability flag of parameter ``p``: ``pB``
* request / response channels: the function name / the result name
* requester context fields: ``RequesterContext.<dimension>``
* per-flow accumulators: ``firstPathPrice``, ``secondPathTime``, ...
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Any, Mapping, Optional

from . import expr as E
from .composition.semantics import CompositionResult, price_value
from .flatten import Flow, flow_signature
from .model import ONE_TIME, ConfiguredService, DataType, is_accumulating, is_effect

log = logging.getLogger(__name__)

MAIN = "M"
INITIAL = "i"
CTX_STRUCT = "RequesterContext"
PATH_KINDS = ("Price", "Availability", "Reliability", "Time")
ORDINALS = (
    "first second third fourth fifth sixth seventh eighth ninth tenth eleventh twelfth "
    "thirteenth fourteenth fifteenth sixteenth seventeenth eighteenth nineteenth twentieth"
).split()
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class GenerationError(Exception):
    pass


class MissingBinding(GenerationError):
    pass


# ------------------------------------------------------------------ types


@dataclass(frozen=True)
class Location:
    id: str
    committed: bool = False
    invariant: Optional[E.Expr] = None

    def __post_init__(self):
        if self.committed and self.invariant is not None:
            raise GenerationError(f"committed location {self.id} cannot carry an invariant")


@dataclass(frozen=True)
class EdgeSpec:
    source: str
    target: str
    guard: E.Expr = E.TRUE
    sync: Optional[tuple] = None  # (channel, "!" | "?")
    update: tuple = ()  # Assign nodes, applied in order
    select: str = ""


@dataclass(frozen=True)
class Template:
    name: str
    locations: tuple
    initial: str
    clocks: tuple = ()
    edges: tuple = ()

    def __post_init__(self):
        ids = {loc.id for loc in self.locations}
        if self.initial not in ids:
            raise GenerationError(f"{self.name}: initial location {self.initial} missing")
        for e in self.edges:
            if e.source not in ids or e.target not in ids:
                raise GenerationError(f"{self.name}: edge {e.source}->{e.target} uses an unknown location")

    def location(self, loc_id: str) -> Location:
        for loc in self.locations:
            if loc.id == loc_id:
                return loc
        raise KeyError(loc_id)


@dataclass(frozen=True)
class VarDecl:
    """A global variable.

    ``group`` names the declaration item it belongs to (availability flags,
    typed parameters, path accumulators, legal variables, conditions,
    requester context). ``init`` is the value used by the exported model;
    ``required`` variables must be bound when a run starts.
    """

    name: str
    type: str  # "bool" | "int"
    init: Any
    group: str
    required: bool = False
    source: Optional[str] = None  # parameter or dimension the value comes from


@dataclass(frozen=True)
class GlobalDecls:
    channels: tuple = ()
    variables: tuple = ()
    constants: tuple = ()  # ((name, code), ...)
    ctx_codes: tuple = ()  # ((dimension, ((tag, code), ...)), ...)
    string_codes: tuple = ()  # ((text, code), ...)
    param_types: tuple = ()  # ((name, DataType), ...)
    scale: int = 1

    def variable(self, name: str) -> VarDecl:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)


@dataclass(frozen=True)
class Network:
    decls: GlobalDecls
    templates: tuple  # main first, then services by name
    system: tuple  # instance names, same order as templates
    flows: tuple = ()  # flow signatures, Final_i order

    @property
    def main(self) -> Template:
        return self.templates[0]

    def template(self, name: str) -> Template:
        for t in self.templates:
            if t.name == name:
                return t
        raise KeyError(name)


@dataclass(frozen=True)
class Query:
    form: str  # "E<>" | "A[]"
    rhs: E.Expr
    lhs: Optional[E.Expr] = None
    category: str = ""
    spaced: bool = False  # render the top comparison with spaces around it

    @property
    def text(self) -> str:
        body = _spaced(self.rhs) if self.spaced else E.to_text(self.rhs)
        if self.form == "E<>":
            return f"E<> {body}"
        return f"A[] {E.to_text(self.lhs)} imply {body}"


def _spaced(e: E.Expr) -> str:
    if isinstance(e, E.BinOp) and e.op in E.COMPARISON:
        return f"{E.to_text(e.left)} {e.op} {E.to_text(e.right)}"
    return E.to_text(e)


# ---------------------------------------------------------------- naming


def ordinal(n: int) -> str:
    return ORDINALS[n - 1] if n <= len(ORDINALS) else f"flow{n}"


def path_var(flow_index: int, kind: str) -> str:
    return f"{ordinal(flow_index)}Path{kind}"


def final_location(flow_index: int) -> str:
    return f"Final_{flow_index}"


def avail(param: str) -> str:
    return param + "B"


def ctx_field(dim: str) -> str:
    return f"{CTX_STRUCT}.{dim}"


def loc_ref(instance: str, loc: str) -> E.Name:
    return E.Name(f"{instance}.{loc}")


# --------------------------------------------------------------- encoding


class Encoder:
    """Maps model values onto the integer/boolean domain of the network."""

    def __init__(self, param_types: Mapping[str, DataType], ctx_types: Mapping[str, DataType], strings=()):
        self.param_types = dict(param_types)
        self.ctx_types = dict(ctx_types)
        self.constants: dict = {}
        for t in self.param_types.values():
            for code, v in enumerate(_enum_values(t), start=1):
                if self.constants.setdefault(v, code) != code:
                    raise GenerationError(f"enum value {v!r} has two different codes")
        self.ctx_codes: dict = {}
        for dim, t in self.ctx_types.items():
            if t.kind == "enum":
                self.ctx_codes[dim] = {v: i for i, v in enumerate(t.values, start=1)}
        self.strings = {s: i for i, s in enumerate(sorted(set(strings)), start=1)}

    def string_code(self, s: str) -> int:
        if s not in self.strings:
            self.strings[s] = len(self.strings) + 1
        return self.strings[s]

    def tag_code(self, dim: str, tag: Any) -> Any:
        codes = self.ctx_codes.get(dim)
        if codes is not None:
            if tag not in codes:
                # a tag outside the declared values matches no rule
                return 0
            return codes[tag]
        return self.value(tag)

    def value(self, v: Any, dtype: Optional[DataType] = None) -> Any:
        if isinstance(v, bool) or isinstance(v, (int, float)):
            return v
        if isinstance(v, str):
            if dtype is not None and dtype.kind == "enum":
                if v not in dtype.values:
                    raise GenerationError(f"{v!r} is not a value of {dtype}")
                return self.constants[v]
            if v in self.constants and (dtype is None or dtype.kind != "string"):
                return self.constants[v]
            return self.string_code(v)
        raise GenerationError(f"value {v!r} cannot be represented in the network")

    def expr(self, e: E.Expr) -> E.Expr:
        """Rewrite a service-level expression into network vocabulary."""

        def fn(node):
            if isinstance(node, E.CtxRef):
                return E.Name(ctx_field(node.dim))
            if isinstance(node, E.Lit) and isinstance(node.value, str):
                return E.Lit(self.string_code(node.value))
            if isinstance(node, E.BinOp) and node.op in ("==", "!="):
                left, right = node.left, node.right
                dim = _ctx_dim(left) or _ctx_dim(right)
                if dim and dim in self.ctx_codes:
                    codes = self.ctx_codes[dim]
                    left = _tag_lit(left, codes)
                    right = _tag_lit(right, codes)
                    return E.BinOp(node.op, left, right)
            return None

        return E.transform(e, fn)


def _ctx_dim(node) -> Optional[str]:
    if isinstance(node, E.Name) and node.id.startswith(CTX_STRUCT + "."):
        return node.id[len(CTX_STRUCT) + 1 :]
    return None


def _tag_lit(node, codes):
    if isinstance(node, E.Name) and node.id in codes:
        return E.Lit(codes[node.id])
    return node


def _enum_values(t: DataType):
    if t.kind == "enum":
        yield from t.values
    elif t.kind == "tuple":
        for el in t.elements:
            yield from _enum_values(el)


def _var_type(t: DataType) -> str:
    if t.kind == "bool":
        return "bool"
    if t.kind == "tuple":
        raise GenerationError(f"type {t} has no representation in the network")
    return "int"


def _flag_target(c: E.Expr) -> Optional[tuple]:
    """``v==lit`` / ``v`` / ``!v`` as (variable, value), else None."""
    if isinstance(c, E.Name):
        return c.id, True
    if isinstance(c, E.Not) and isinstance(c.operand, E.Name):
        return c.operand.id, False
    if isinstance(c, E.BinOp) and c.op == "==":
        if isinstance(c.left, E.Name) and isinstance(c.right, E.Lit):
            return c.left.id, c.right.value
        if isinstance(c.right, E.Name) and isinstance(c.left, E.Lit):
            return c.right.id, c.left.value
    return None


def _scale_for(amounts) -> int:
    scale = 1
    for a in amounts:
        for node in E.walk(a):
            if isinstance(node, E.Lit) and isinstance(node.value, float):
                v = node.value
                while abs(v * scale - round(v * scale)) > 1e-9:
                    scale *= 10
                    if scale > 10**6:
                        raise GenerationError(f"price literal {v} needs too fine a scale")
    return scale


def _scaled(e: E.Expr, scale: int) -> E.Expr:
    """``scale*e`` with the factor pushed into literals, keeping amounts integral."""
    if scale == 1:
        return e
    if isinstance(e, E.Lit):
        return E.Lit(int(round(e.value * scale)))
    if isinstance(e, E.Name):
        return E.BinOp("*", E.Lit(scale), e)
    if isinstance(e, E.Call):
        return E.Call(e.fn, tuple(_scaled(a, scale) for a in e.args))
    if isinstance(e, E.BinOp) and e.op in ("+", "-"):
        return E.BinOp(e.op, _scaled(e.left, scale), _scaled(e.right, scale))
    if isinstance(e, E.BinOp) and e.op == "*":
        if E.is_constant(e.left):
            return E.BinOp("*", _scaled(E.simplify(e.left), scale), e.right)
        return E.BinOp("*", e.left, _scaled(e.right, scale))
    raise GenerationError(f"cannot scale price expression {E.to_text(e)}")


def step_price(s: ConfiguredService) -> Optional[E.Expr]:
    """Price charged by one invocation, per-unit rates times their usage."""
    p = s.nonfunctional.price
    if p is None:
        return None
    if p.unit != ONE_TIME and p.per is not None:
        return E.BinOp("*", p.amount, E.Name(p.per))
    return p.amount


# ---------------------------------------------------------- declarations


def _vocabulary(services) -> tuple:
    param_types: dict = {}
    ctx_types: dict = {}
    for s in services:
        for p in s.params:
            prev = param_types.setdefault(p.name, p.dtype)
            if prev != p.dtype:
                raise GenerationError(f"parameter {p.name!r} typed {prev} and {p.dtype}")
        for dim, t in s.context.info.typing:
            ctx_types.setdefault(dim, t)
    return param_types, ctx_types


def gen_global_decls(
    sc: CompositionResult,
    flows=None,
    bindings: Optional[Mapping[str, Any]] = None,
    requester: Optional[Mapping[str, Any]] = None,
) -> GlobalDecls:
    """Global declarations for a composition.

    ``bindings`` and ``requester`` provide the initial values written into
    the model; they can be replaced when a verification run starts.
    """
    flows = list(flows if flows is not None else sc.flows)
    bindings = dict(bindings or {})
    requester = dict(requester or {})
    services = sorted(sc.services, key=lambda s: s.name)
    param_types, ctx_types = _vocabulary(services)

    strings = [v for v in list(bindings.values()) + list(requester.values()) if isinstance(v, str)]
    exprs = _all_exprs(services, flows)
    strings += [n.value for e in exprs for n in E.walk(e) if isinstance(n, E.Lit) and isinstance(n.value, str)]
    enc = Encoder(param_types, ctx_types, [s for s in strings if s not in _all_enum_values(param_types, ctx_types)])

    channels = []
    for s in services:
        for ch in (s.function.name, s.function.result_name):
            if not ch:
                raise GenerationError(f"service {s.name} needs a function name and a result name")
            if ch in channels:
                raise GenerationError(f"channel {ch!r} used by two services")
            channels.append(ch)

    decls: list = []
    taken: set = set()

    def add(name, type_, init, group, required=False, source=None):
        if name in taken:
            return
        taken.add(name)
        decls.append(VarDecl(name, type_, init, group, required, source))

    pre_flags, post_flags = [], []
    for s in services:
        for c in s.function.pre:
            t = _flag_target(c)
            if t and param_types.get(t[0], DataType("bool")).kind == "bool" and isinstance(t[1], bool):
                pre_flags.append(t[0])
        for c in s.function.post:
            t = _flag_target(c)
            if t and param_types.get(t[0], DataType("bool")).kind == "bool" and isinstance(t[1], bool):
                post_flags.append(t[0])
    # external inputs are those of the composite; data passed between
    # services starts unavailable, like any other output
    inputs = _ordered(sc.composite.function.inputs)
    outputs = [
        n
        for n in _ordered(n for s in services for n in s.function.outputs + s.function.inputs)
        if n not in inputs
    ]

    def init_of(name, default):
        if name in bindings:
            return enc.value(bindings[name], param_types.get(name))
        return default

    # availability of preconditions and inputs: true before execution
    for n in _ordered(pre_flags):
        if n not in post_flags:
            add(n, "bool", init_of(n, True), "pre", source=n)
    for n in inputs:
        add(avail(n), "bool", True, "input")
    # postconditions and outputs: false until produced
    for n in _ordered(post_flags):
        add(n, "bool", False, "post", source=n)
    for n in outputs:
        add(avail(n), "bool", False, "output")
    # typed parameters
    legal_names = {n for s in services for r in s.contract.legal for n in _legal_names(r)}
    fn_names = set(inputs) | set(outputs)
    for s in services:
        for p in s.params:
            if p.name in legal_names and p.name not in fn_names:
                continue
            t = p.dtype
            if t.kind == "tuple":
                continue
            add(p.name, _var_type(t), init_of(p.name, _zero(t)), "param", required=p.name in inputs, source=p.name)
    # path accumulators
    for i in range(1, len(flows) + 1):
        for kind in PATH_KINDS:
            add(path_var(i, kind), "int", 0, "path")
    # legal-issue variables
    for s in services:
        for p in s.params:
            if p.name in legal_names:
                add(p.name, _var_type(p.dtype), init_of(p.name, _zero(p.dtype)), "legal", source=p.name)
    # guard conditions that are not parameters
    for f in flows:
        for g in f.guards():
            for n in sorted(E.names(g)):
                if n not in param_types and n not in enc.constants:
                    add(n, "bool", bool(bindings.get(n, False)), "condition", required=True, source=n)
    # requester context
    dims = _ordered(d for s in services for r in s.context.rules for d in E.ctx_dims(r))
    for d in dims:
        t = ctx_types.get(d)
        if t is not None and t.kind == "tuple":
            raise GenerationError(f"context dimension {d!r} of type {t} cannot be compared in the network")
        type_ = "bool" if t is not None and t.kind == "bool" else "int"
        init = enc.tag_code(d, requester[d]) if d in requester else (False if type_ == "bool" else 0)
        add(ctx_field(d), type_, init, "context", required=True, source=d)

    for name, _ in enc.constants.items():
        if name in taken:
            raise GenerationError(f"enum value {name!r} collides with a variable name")
    for v in decls:
        if not _IDENT.match(v.name.replace(CTX_STRUCT + ".", "", 1)):
            raise GenerationError(f"{v.name!r} is not a valid identifier in the generated model")
    prices = [step_price(s) for s in services if s.nonfunctional.price is not None]
    return GlobalDecls(
        channels=tuple(channels),
        variables=tuple(decls),
        constants=tuple(enc.constants.items()),
        ctx_codes=tuple((d, tuple(c.items())) for d, c in enc.ctx_codes.items()),
        string_codes=tuple(sorted(enc.strings.items(), key=lambda kv: kv[1])),
        param_types=tuple(param_types.items()),
        scale=_scale_for(prices),
    )


def _zero(t: DataType):
    return False if t.kind == "bool" else 0


def _ordered(items) -> list:
    out = []
    for x in items:
        if x not in out:
            out.append(x)
    return out


def _legal_names(rule: E.Expr) -> set:
    out = set(E.names(rule))
    if isinstance(rule, E.Assign):
        out.add(rule.target)
    return out


def _all_enum_values(*type_maps) -> set:
    return {v for m in type_maps for t in m.values() for v in _enum_values(t)}


def _all_exprs(services, flows) -> list:
    out = []
    for s in services:
        f = s.function
        out += list(s.context.rules) + list(f.pre) + list(f.post) + list(s.contract.legal)
        out += list(s.nonfunctional.safety_data or ())
        if s.nonfunctional.price is not None:
            out.append(s.nonfunctional.price.amount)
    for fl in flows:
        out += fl.guards()
    return out


def encoder_for(decls: GlobalDecls) -> Encoder:
    ctx_types = {}
    for dim, codes in decls.ctx_codes:
        ctx_types[dim] = DataType("enum", dim, tuple(t for t, _ in codes))
    enc = Encoder(dict(decls.param_types), ctx_types)
    enc.strings = dict(decls.string_codes)
    return enc


# --------------------------------------------------------------- templates


def gen_service_template(s: ConfiguredService, enc: Optional[Encoder] = None) -> Template:
    """Two locations, a request edge guarded by the service's obligations and a response edge."""
    enc = enc or Encoder(s.param_types(), s.context.info.types())
    f = s.function
    guard = [enc.expr(r) for r in s.context.rules]
    guard += [enc.expr(c) for c in f.pre]
    guard += [enc.expr(r) for r in s.contract.legal if not is_effect(r)]
    guard += [E.Name(avail(n)) for n in f.inputs]

    update = []
    for c in f.post:
        t = _flag_target(c)
        if t is None:
            log.warning("%s: postcondition %s is not an assignment; no update generated", s.name, E.to_text(c))
            continue
        value = t[1]
        if isinstance(value, str):
            value = enc.value(value, s.param_types().get(t[0]))
        update.append(E.Assign(t[0], E.Lit(value)))
    update += [E.Assign(avail(n), E.TRUE) for n in f.outputs]
    update += [enc.expr(r) for r in s.contract.legal if is_effect(r)]

    idle, busy = "idle", f"{s.name}Processing"
    return Template(
        name=s.name,
        locations=(Location(idle), Location(busy)),
        initial=idle,
        edges=(
            EdgeSpec(idle, busy, E.conj(guard), (f.name, "?")),
            EdgeSpec(busy, idle, E.TRUE, (f.result_name, "!"), tuple(update)),
        ),
    )


def _groups(flow: Flow) -> list:
    """Index runs of a flow: a step plus the parallel-tail steps following it."""
    groups: list = []
    for j, step in enumerate(flow.steps):
        if step.parallel_tail and groups:
            groups[-1].append(j)
        else:
            groups.append([j])
    return groups


def _argmax(indices, key) -> Optional[int]:
    best = None
    for j in indices:
        v = key(j)
        if v is None:
            continue
        if best is None or v > key(best):
            best = j
    return best


def gen_main_ta(flows, catalog: Mapping[str, ConfiguredService], enc: Optional[Encoder] = None, scale: int = 1) -> Template:
    """Main automaton ``M``: an idle location ``i`` and a request/done path per flow."""
    if enc is None:
        types: dict = {}
        ctx: dict = {}
        for s in catalog.values():
            types.update(s.param_types())
            ctx.update(s.context.info.types())
        enc = Encoder(types, ctx)
    locations = [Location(INITIAL)]
    edges = []
    clocks = []
    for fi, flow in enumerate(flows, start=1):
        try:
            services = [catalog[st.service] for st in flow.steps]
        except KeyError as exc:
            raise GenerationError(f"flow {fi} references unknown service {exc.args[0]!r}") from None
        timed: dict = {}
        committed: set = set()
        reliable: set = set()
        for group in _groups(flow):
            nf = lambda j: services[j].nonfunctional  # noqa: E731
            top_time = _argmax(group, lambda j: nf(j).safety_time)
            top_rel = _argmax(group, lambda j: nf(j).reliability)
            for j in group:
                if nf(j).reliability is not None and (len(group) == 1 or j == top_rel):
                    reliable.add(j)
                if len(group) == 1:
                    if nf(j).safety_time is not None:
                        timed[j] = nf(j).safety_time
                elif j == top_time:
                    timed[j] = nf(j).safety_time
                elif top_time is not None:
                    committed.add(j)

        prev = INITIAL
        last = len(flow.steps) - 1
        for j, (step, s) in enumerate(zip(flow.steps, services)):
            base = f"f{fi}s{j + 1}_{s.name}"
            req = base
            done = final_location(fi) if j == last else base + "_done"
            invariant = None
            reset = ()
            if j in timed:
                clock = f"x_f{fi}s{j + 1}"
                clocks.append(clock)
                invariant = E.BinOp("<=", E.Name(clock), E.Lit(timed[j]))
                reset = (E.Assign(clock, E.Lit(0)),)
            locations.append(Location(req, committed=j in committed, invariant=invariant))
            locations.append(Location(done))

            guard = [enc.expr(g) for g in step.guards]
            guard += [enc.expr(c) for c in s.nonfunctional.safety_data or ()]
            edges.append(EdgeSpec(prev, req, E.conj(guard), (s.function.name, "!"), reset))

            nf = s.nonfunctional
            update = []
            amount = step_price(s)
            if amount is not None:
                update.append(_accumulate(path_var(fi, "Price"), enc.expr(_scaled(amount, scale))))
            if nf.availability is not None:
                update.append(_accumulate(path_var(fi, "Availability"), E.Lit(nf.availability)))
            if j in reliable:
                update.append(_accumulate(path_var(fi, "Reliability"), E.Lit(nf.reliability)))
            if j in timed:
                update.append(_accumulate(path_var(fi, "Time"), E.Lit(timed[j])))
            exit_guard = E.conj(enc.expr(g) for g in flow.exit_guards) if j == last else E.TRUE
            edges.append(EdgeSpec(req, done, exit_guard, (s.function.result_name, "?"), tuple(update)))
            prev = done
    return Template(MAIN, tuple(locations), INITIAL, tuple(clocks), tuple(edges))


def _accumulate(var: str, amount: E.Expr) -> E.Assign:
    return E.Assign(var, E.BinOp("+", E.Name(var), amount))


def build_network(
    sc: CompositionResult,
    bindings: Optional[Mapping[str, Any]] = None,
    requester: Optional[Mapping[str, Any]] = None,
) -> Network:
    flows = sc.flows
    decls = gen_global_decls(sc, flows, bindings, requester)
    enc = encoder_for(decls)
    catalog = {s.name: s for s in sc.services}
    main = gen_main_ta(flows, catalog, enc, decls.scale)
    services = sorted(sc.services, key=lambda s: s.name)
    templates = (main,) + tuple(gen_service_template(s, enc) for s in services)
    names = [t.name for t in templates]
    if len(set(names)) != len(names):
        raise GenerationError("a service is named like the main automaton")
    return Network(decls, templates, tuple(names), tuple(flow_signature(f) for f in flows))


# ----------------------------------------------------------------- queries


def gen_queries(
    sc: CompositionResult,
    network: Network,
    bindings: Optional[Mapping[str, Any]] = None,
    bounds: Optional[Mapping[str, Any]] = None,
    legal_requirements=(),
) -> list:
    """The verification suite, grouped by category in a fixed order."""
    bindings = dict(bindings or {})
    bounds = dict(bounds or {})
    enc = encoder_for(network.decls)
    init = loc_ref(MAIN, INITIAL)
    flows = list(sc.per_flow)
    n = len(flows)
    finals = [loc_ref(MAIN, final_location(i)) for i in range(1, n + 1)]
    composite = sc.composite
    guards = {g for f, _ in flows for g in f.guards()}
    qs: list = []

    for i in range(n):
        qs.append(Query("E<>", finals[i], category="reachability"))
    for r in composite.context.rules:
        qs.append(Query("A[]", enc.expr(r), init, "context"))
    for p in composite.function.inputs:
        qs.append(Query("A[]", E.Name(avail(p)), init, "input"))
    for p in composite.function.outputs:
        if p not in composite.function.inputs:
            qs.append(Query("A[]", E.Not(E.Name(avail(p))), init, "output-before"))
    for i, (_, c) in enumerate(flows):
        for p in c.function.outputs:
            qs.append(Query("A[]", E.Name(avail(p)), finals[i], "output-after"))
    for c in composite.function.pre:
        if c not in guards:
            qs.append(Query("A[]", enc.expr(c), init, "precondition"))
    for i, (_, c) in enumerate(flows):
        for post in c.function.post:
            qs.append(Query("A[]", enc.expr(post), finals[i], "postcondition"))

    scale = network.decls.scale
    limits = _bounds(sc, bindings, bounds)
    for kind, op in (("Price", "<="), ("Time", "<="), ("Availability", "<="), ("Reliability", ">=")):
        limit = limits.get(kind.lower())
        if limit is None:
            continue
        if kind == "Price":
            limit = limit * scale
            if isinstance(limit, float) and limit.is_integer():
                limit = int(limit)
        for i in range(n):
            rhs = E.BinOp(op, E.Name(path_var(i + 1, kind)), E.Lit(limit))
            qs.append(Query("A[]", rhs, finals[i], kind.lower(), spaced=True))

    for i, (_, c) in enumerate(flows):
        for r in c.contract.legal:
            if is_accumulating(r):
                continue
            fact = E.BinOp("==", E.Name(r.target), enc.expr(r.value)) if is_effect(r) else enc.expr(r)
            qs.append(Query("A[]", fact, finals[i], "legal"))
        for r in legal_requirements:
            qs.append(Query("A[]", enc.expr(r), finals[i], "legal"))
    return qs


def _bounds(sc: CompositionResult, bindings, bounds) -> dict:
    nf = sc.composite.nonfunctional
    out = {
        "time": nf.safety_time,
        "availability": nf.availability,
        "reliability": nf.reliability,
        "price": None,
    }
    if nf.price is not None and "price" not in bounds:
        try:
            out["price"] = price_value(nf.price, sc.composite, bindings)
        except Exception as exc:
            raise GenerationError(f"composite price bound not evaluable: {exc}") from None
    out.update({k: v for k, v in bounds.items() if v is not None})
    return out


def network_summary(net: Network) -> dict:
    """Plain-data view of a network, stable enough to commit as a golden file."""

    def text(e):
        return None if e is None else E.to_text(e)

    return {
        "channels": list(net.decls.channels),
        "constants": [list(c) for c in net.decls.constants],
        "variables": [[v.name, v.type, v.init, v.group] for v in net.decls.variables],
        "system": list(net.system),
        "flows": list(net.flows),
        "templates": [
            {
                "name": t.name,
                "initial": t.initial,
                "clocks": list(t.clocks),
                "locations": [[loc.id, loc.committed, text(loc.invariant)] for loc in t.locations],
                "edges": [
                    {
                        "source": e.source,
                        "target": e.target,
                        "guard": [E.to_text(c) for c in E.conjuncts(e.guard)] if e.guard != E.TRUE else [],
                        "sync": None if e.sync is None else e.sync[0] + e.sync[1],
                        "update": [E.to_text(u) for u in e.update],
                    }
                    for e in t.edges
                ],
            }
            for t in net.templates
        ],
    }
