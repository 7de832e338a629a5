"""Bounded, discrete-time, explicit-state model checking of generated networks.

Time advances in unit delays; every clock is capped at one above the
largest constant it is compared against, which keeps the state space finite
and is exact for the closed integer constraints the generator emits.

A state is ``(locations, clocks, variables)``: three tuples indexed like the
network's templates, clocks and declared variables.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Optional

from . import expr as E
from .model import ContextInfo
from .tagen import MissingBinding, Network, Query, encoder_for

DEFAULT_BOUND = 100_000

State = tuple  # (locations, clocks, variables)


class CheckError(Exception):
    pass


class BindingTypeError(CheckError):
    pass


class UnresolvedReference(CheckError):
    pass


# ------------------------------------------------------------------ layout


@dataclass(frozen=True)
class Layout:
    """Index tables shared by the checker, the oracle and trace replay."""

    instances: tuple  # template names
    locations: tuple  # per instance: tuple of location ids
    clocks: tuple  # (instance index, clock name)
    variables: tuple  # variable names
    var_types: tuple
    constants: dict
    caps: tuple  # per clock

    def location_index(self, inst: int, loc: str) -> int:
        return self.locations[inst].index(loc)

    def clock_index(self, name: str) -> int:
        for k, (_, c) in enumerate(self.clocks):
            if c == name:
                return k
        raise KeyError(name)


def layout(net: Network) -> Layout:
    clocks = tuple((i, c) for i, t in enumerate(net.templates) for c in t.clocks)
    clock_names = {c for _, c in clocks}
    caps = {c: 0 for c in clock_names}
    for t in net.templates:
        exprs = [loc.invariant for loc in t.locations if loc.invariant is not None]
        exprs += [e.guard for e in t.edges]
        for ex in exprs:
            for node in E.walk(ex):
                if isinstance(node, E.BinOp) and node.op in E.COMPARISON:
                    for a, b in ((node.left, node.right), (node.right, node.left)):
                        if isinstance(a, E.Name) and a.id in clock_names and isinstance(b, E.Lit):
                            caps[a.id] = max(caps[a.id], int(b.value))
    return Layout(
        instances=tuple(t.name for t in net.templates),
        locations=tuple(tuple(loc.id for loc in t.locations) for t in net.templates),
        clocks=clocks,
        variables=tuple(v.name for v in net.decls.variables),
        var_types=tuple(v.type for v in net.decls.variables),
        constants=dict(net.decls.constants),
        caps=tuple(caps[c] + 1 for _, c in clocks),
    )


# ---------------------------------------------------------- initial state


def _requester_tags(requester) -> dict:
    if requester is None:
        return {}
    if isinstance(requester, ContextInfo):
        return requester.tags()
    return dict(requester)


def init_state(net: Network, requester=None, bindings: Optional[Mapping[str, Any]] = None) -> State:
    """Initial configuration: initial locations, zero clocks, declared initial values.

    Values of parameters and conditions come from ``bindings``; requester
    context fields from ``requester``. Required names that are missing raise
    MissingBinding.
    """
    tags = _requester_tags(requester)
    bindings = dict(bindings or {})
    enc = encoder_for(net.decls)
    for s in sorted(v for v in list(bindings.values()) + list(tags.values()) if isinstance(v, str)):
        if s not in enc.constants:
            enc.string_code(s)
    types = dict(net.decls.param_types)
    values = []
    for v in net.decls.variables:
        if v.group == "context":
            if v.source not in tags:
                raise MissingBinding(f"requester context lacks dimension {v.source!r}")
            value = enc.tag_code(v.source, tags[v.source])
        elif v.group in ("pre", "param", "legal", "condition"):
            if v.source in bindings:
                value = enc.value(bindings[v.source], types.get(v.source))
            elif v.required:
                raise MissingBinding(f"no binding for {v.source!r}")
            elif v.group == "pre":
                value = True
            else:
                value = False if v.type == "bool" else 0
        elif v.group == "input":
            value = True
        elif v.group in ("post", "output"):
            value = False
        else:
            value = 0
        if v.type == "bool" and not isinstance(value, bool):
            raise BindingTypeError(f"{v.name} is boolean, got {value!r}")
        if v.type == "int" and (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise BindingTypeError(f"{v.name} is numeric, got {value!r}")
        values.append(value)
    locs = tuple(t.locations.index(t.location(t.initial)) for t in net.templates)
    nclocks = sum(len(t.clocks) for t in net.templates)
    return (locs, (0,) * nclocks, tuple(values))


# -------------------------------------------------------------- compiling


def _compile(e: E.Expr, resolve: Callable[[str], Callable]) -> Callable:
    """Compile an expression to a closure over states."""
    if isinstance(e, E.Lit):
        v = e.value
        return lambda st: v
    if isinstance(e, E.Name):
        return resolve(e.id)
    if isinstance(e, E.CtxRef):
        return resolve(f"RequesterContext.{e.dim}")
    if isinstance(e, E.Not):
        f = _compile(e.operand, resolve)
        return lambda st: not f(st)
    if isinstance(e, E.Call):
        fs = [_compile(a, resolve) for a in e.args]
        pick = max if e.fn == "max" else min
        return lambda st: pick(f(st) for f in fs)
    if isinstance(e, E.Assign):
        raise CheckError("assignments are not expressions")
    a, b = _compile(e.left, resolve), _compile(e.right, resolve)
    op = e.op
    if op == "&&":
        return lambda st: a(st) and b(st)
    if op == "||":
        return lambda st: a(st) or b(st)
    if op == "=>":
        return lambda st: (not a(st)) or b(st)
    table = {
        "==": lambda x, y: x == y,
        "!=": lambda x, y: x != y,
        "<": lambda x, y: x < y,
        "<=": lambda x, y: x <= y,
        ">": lambda x, y: x > y,
        ">=": lambda x, y: x >= y,
        "+": lambda x, y: x + y,
        "-": lambda x, y: x - y,
        "*": lambda x, y: x * y,
    }
    fn = table[op]
    return lambda st: fn(a(st), b(st))


def _resolver(lay: Layout, clock_offset: dict) -> Callable:
    var_idx = {n: k for k, n in enumerate(lay.variables)}

    def resolve(name: str):
        if name in var_idx:
            k = var_idx[name]
            return lambda st: st[2][k]
        if name in clock_offset:
            k = clock_offset[name]
            return lambda st: st[1][k]
        if name in lay.constants:
            v = lay.constants[name]
            return lambda st: v
        inst, _, loc = name.partition(".")
        if inst in lay.instances and loc:
            i = lay.instances.index(inst)
            if loc not in lay.locations[i]:
                raise UnresolvedReference(f"{inst} has no location {loc!r}")
            li = lay.locations[i].index(loc)
            return lambda st: st[0][i] == li
        raise UnresolvedReference(f"unknown name {name!r}")

    return resolve


@dataclass
class _Edge:
    inst: int
    index: int
    source: int
    target: int
    guard: Callable
    sync: Optional[tuple]
    updates: tuple  # ((is_clock, index, fn), ...)


class Compiled:
    """A network compiled to closures for fast successor computation."""

    def __init__(self, net: Network, reduce_clocks: bool = True):
        self.net = net
        self.lay = layout(net)
        self.clock_idx = {c: k for k, (_, c) in enumerate(self.lay.clocks)}
        self.resolve = _resolver(self.lay, self.clock_idx)
        var_idx = {n: k for k, n in enumerate(self.lay.variables)}
        self.invariants = []
        self.committed = []
        self.edges = []  # per instance, per source location: list of _Edge
        for i, t in enumerate(net.templates):
            inv = []
            com = []
            for loc in t.locations:
                inv.append(_compile(loc.invariant, self.resolve) if loc.invariant is not None else None)
                com.append(loc.committed)
            self.invariants.append(tuple(inv))
            self.committed.append(tuple(com))
            by_source = [[] for _ in t.locations]
            for k, e in enumerate(t.edges):
                ups = []
                for u in e.update:
                    if u.target in self.clock_idx:
                        ups.append((True, self.clock_idx[u.target], _compile(u.value, self.resolve)))
                    elif u.target in var_idx:
                        ups.append((False, var_idx[u.target], _compile(u.value, self.resolve)))
                    else:
                        raise UnresolvedReference(f"assignment to unknown name {u.target!r}")
                src = t.locations.index(t.location(e.source))
                by_source[src].append(
                    _Edge(i, k, src, t.locations.index(t.location(e.target)), _compile(e.guard, self.resolve), e.sync, tuple(ups))
                )
            self.edges.append(by_source)
        self.dead = _dead_clocks(net, self.lay) if reduce_clocks else ()

    def predicate(self, e: E.Expr) -> Callable:
        return _compile(e, self.resolve)

    def _invariants_hold(self, st) -> bool:
        for i, li in enumerate(st[0]):
            inv = self.invariants[i][li]
            if inv is not None and not inv(st):
                return False
        return True

    def _fire(self, st, edges) -> Optional[State]:
        locs = list(st[0])
        clocks = list(st[1])
        values = list(st[2])
        for e in edges:
            locs[e.inst] = e.target
            for is_clock, k, fn in e.updates:
                cur = (tuple(locs), tuple(clocks), tuple(values))
                if is_clock:
                    clocks[k] = min(fn(cur), self.lay.caps[k])
                else:
                    values[k] = fn(cur)
        self._normalise(locs, clocks)
        new = (tuple(locs), tuple(clocks), tuple(values))
        return new if self._invariants_hold(new) else None

    def _normalise(self, locs, clocks) -> None:
        for k, inst, live in self.dead:
            if locs[inst] not in live:
                clocks[k] = 0

    def successors(self, st) -> list:
        out = []
        committed_active = any(self.committed[i][li] for i, li in enumerate(st[0]))
        enabled = []
        for i, li in enumerate(st[0]):
            enabled.append([e for e in self.edges[i][li] if e.guard(st)])
        for i, es in enumerate(enabled):
            for e in es:
                if e.sync is None:
                    if committed_active and not self.committed[i][st[0][i]]:
                        continue
                    new = self._fire(st, [e])
                    if new is not None:
                        out.append((("tau", i, e.index), new))
                    continue
                ch, direction = e.sync
                if direction != "!":
                    continue
                for j, rs in enumerate(enabled):
                    if j == i:
                        continue
                    for r in rs:
                        if r.sync != (ch, "?"):
                            continue
                        if committed_active and not (
                            self.committed[i][st[0][i]] or self.committed[j][st[0][j]]
                        ):
                            continue
                        new = self._fire(st, [e, r])
                        if new is not None:
                            out.append((("sync", ch, (i, e.index), (j, r.index)), new))
        if not committed_active:
            clocks = [min(c + 1, cap) for c, cap in zip(st[1], self.lay.caps)]
            self._normalise(st[0], clocks)
            delayed = (st[0], tuple(clocks), st[2])
            if delayed != st and self._invariants_hold(delayed):
                out.append((("delay", 1), delayed))
        return out


def _dead_clocks(net: Network, lay: Layout) -> tuple:
    """Clocks whose value is irrelevant outside a known set of locations.

    A clock of template ``t`` qualifies when it is read only by ``t``, only in
    invariants and outgoing edges of a set of locations ``L``, and every edge
    entering ``L`` resets it to a constant. Outside ``L`` it can be held at 0
    without changing any reachable behaviour, which removes the spurious
    interleavings of idle clocks ticking.
    """
    out = []
    for k, (i, c) in enumerate(lay.clocks):
        t = net.templates[i]
        elsewhere = False
        for j, other in enumerate(net.templates):
            if j == i:
                continue
            exprs = [loc.invariant for loc in other.locations if loc.invariant is not None]
            exprs += [e.guard for e in other.edges] + [u.value for e in other.edges for u in e.update]
            if any(c in E.names(x) for x in exprs) or any(u.target == c for e in other.edges for u in e.update):
                elsewhere = True
        if elsewhere:
            continue
        index = {loc.id: n for n, loc in enumerate(t.locations)}
        live = {index[loc.id] for loc in t.locations if loc.invariant is not None and c in E.names(loc.invariant)}
        for e in t.edges:
            if c in E.names(e.guard) or any(c in E.names(u.value) for u in e.update):
                live.add(index[e.source])
        ok = True
        for e in t.edges:
            if index[e.target] in live:
                resets = [u for u in e.update if u.target == c]
                if not resets or not isinstance(resets[-1].value, E.Lit):
                    ok = False
                    break
        if ok:
            out.append((k, i, frozenset(live)))
    return tuple(out)


def successors(net: Network, st: State) -> list:
    return Compiled(net).successors(st)


# ------------------------------------------------------------------ verdicts


@dataclass(frozen=True)
class Trace:
    steps: tuple = ()  # ("delay", 1) | ("sync", ch, (i, k), (j, k)) | ("tau", i, k)
    states: tuple = ()  # state after each step; states[0] is the initial state

    @property
    def end(self) -> State:
        return self.states[-1]


@dataclass(frozen=True)
class Verdict:
    holds: Optional[bool]
    evidence: Optional[Trace] = None
    states_explored: int = 0
    bound_hit: bool = False

    @property
    def status(self) -> str:
        if self.holds is None:
            return "INCONCLUSIVE"
        return "PASS" if self.holds else "FAIL"


def _target(q: Query) -> tuple:
    """(predicate to search for, whether finding it proves the query)."""
    if q.form == "E<>":
        return q.rhs, True
    if q.form == "A[]":
        lhs = q.lhs if q.lhs is not None else E.TRUE
        return E.BinOp("&&", lhs, E.Not(q.rhs)), False
    raise CheckError(f"unsupported query form {q.form!r}")


def check_query(
    net: Network,
    q: Query,
    requester=None,
    bindings=None,
    bound: int = DEFAULT_BOUND,
    compiled: Optional[Compiled] = None,
) -> Verdict:
    """Breadth-first search for a witness (E<>) or a counterexample (A[])."""
    return _search(net, [q], requester, bindings, bound, compiled)[0]


def _uses_clocks(net: Network, queries) -> bool:
    clocks = {c for t in net.templates for c in t.clocks}
    for q in queries:
        for part in (q.lhs, q.rhs):
            if part is not None and clocks & set(E.names(part)):
                return True
    return False


def _search(net, queries, requester, bindings, bound, compiled=None) -> list:
    """One breadth-first exploration answering every query.

    States are visited in the same order as a search for any single query,
    so each verdict, its trace and its explored count are what that query
    would get on its own.
    """
    if bound < 1:
        raise ValueError("bound must be at least 1")
    c = compiled or Compiled(net, reduce_clocks=not _uses_clocks(net, queries))
    targets = [_target(q) for q in queries]
    goals = [c.predicate(g) for g, _ in targets]
    verdicts: list = [None] * len(queries)
    pending = list(range(len(queries)))
    start = init_state(net, requester, bindings)
    parent = {start: None}
    queue = deque([start])
    explored = 0
    truncated = False
    while queue and pending:
        st = queue.popleft()
        explored += 1
        still = []
        for n in pending:
            if goals[n](st):
                verdicts[n] = Verdict(targets[n][1], _trace(parent, st), explored, False)
            else:
                still.append(n)
        pending = still
        if not pending:
            break
        for step, nxt in c.successors(st):
            if nxt in parent:
                continue
            if len(parent) >= bound:
                truncated = True
                continue
            parent[nxt] = (st, step)
            queue.append(nxt)
    for n in pending:
        if truncated:
            verdicts[n] = Verdict(None, None, explored, True)
        else:
            verdicts[n] = Verdict(not targets[n][1], None, explored, False)
    return verdicts


def _trace(parent: dict, st: State) -> Trace:
    steps, states = [], [st]
    while parent[st] is not None:
        prev, step = parent[st]
        steps.append(step)
        states.append(prev)
        st = prev
    return Trace(tuple(reversed(steps)), tuple(reversed(states)))


def replay(net: Network, trace: Trace, requester=None, bindings=None) -> State:
    """Re-run ``trace`` from the initial state; raises CheckError on a step that cannot fire."""
    c = Compiled(net)
    st = init_state(net, requester, bindings)
    if trace.states and trace.states[0] != st:
        raise CheckError("trace starts from a different initial state")
    for n, step in enumerate(trace.steps):
        for label, nxt in c.successors(st):
            if label == step:
                st = nxt
                break
        else:
            raise CheckError(f"step {n} ({step}) is not enabled")
    return st


def holds_at(net: Network, e: E.Expr, st: State) -> bool:
    return bool(Compiled(net).predicate(e)(st))


# ------------------------------------------------------------------ reports


@dataclass(frozen=True)
class QueryResult:
    query: Query
    verdict: Verdict


def check_all(net: Network, queries, requester=None, bindings=None, bound: int = DEFAULT_BOUND) -> list:
    queries = list(queries)
    verdicts = _search(net, queries, requester, bindings, bound)
    return [QueryResult(q, v) for q, v in zip(queries, verdicts)]


def describe_step(net: Network, step: tuple) -> str:
    if step[0] == "delay":
        return f"delay {step[1]}"
    if step[0] == "tau":
        _, i, k = step
        t = net.templates[i]
        e = t.edges[k]
        return f"{t.name}: {e.source} -> {e.target}"
    _, ch, (i, ei), (j, ej) = step
    a, b = net.templates[i], net.templates[j]
    ea, eb = a.edges[ei], b.edges[ej]
    return f"{ch}: {a.name} {ea.source} -> {ea.target} | {b.name} {eb.source} -> {eb.target}"


def text_report(net: Network, results, with_traces: bool = True) -> str:
    lines = []
    for r in results:
        v = r.verdict
        lines.append(f"{v.status:<12} {r.query.text}")
        lines.append(f"             category={r.query.category} states={v.states_explored} bound_hit={str(v.bound_hit).lower()}")
        if with_traces and v.evidence is not None:
            kind = "witness" if v.holds else "counterexample"
            lines.append(f"             {kind}:")
            for step in v.evidence.steps:
                lines.append(f"               {describe_step(net, step)}")
    passed = sum(r.verdict.status == "PASS" for r in results)
    lines.append(f"{passed}/{len(results)} queries pass")
    return "\n".join(lines) + "\n"


def machine_report(results) -> str:
    lines = []
    for r in results:
        v = r.verdict
        record = {
            "query": r.query.text,
            "category": r.query.category,
            "verdict": v.status,
            "states": v.states_explored,
            "bound_hit": v.bound_hit,
        }
        lines.append(json.dumps(record, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")
