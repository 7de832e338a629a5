"""Reference verdicts by naive enumeration of the whole product graph.

Written independently of the checker's search: expressions are interpreted
with the generic evaluator instead of compiled closures, successors are
recomputed from the raw templates, and the reachable set is a plain fixpoint
computed frontier by frontier with no search order. Used to cross-check the checker in tests.
"""

from __future__ import annotations

from itertools import product

from . import expr as E
from .checker import Verdict, init_state, layout
from .tagen import Network, Query

DEFAULT_CAP = 200_000


class OracleCapExceeded(Exception):
    pass


def _env(net, lay, st):
    values = dict(zip(lay.variables, st[2]))
    values.update({c: st[1][k] for k, (_, c) in enumerate(lay.clocks)})

    def lookup(name):
        if name in values:
            return values[name]
        if name in lay.constants:
            return lay.constants[name]
        inst, _, loc = name.partition(".")
        if inst in lay.instances:
            i = lay.instances.index(inst)
            return lay.locations[i][st[0][i]] == loc
        raise KeyError(name)

    return lookup


def _truth(e, net, lay, st) -> bool:
    if e is None:
        return True
    return E.evaluate(e, _env(net, lay, st)) is True


def _apply(net, lay, st, moves):
    locs, clocks, values = list(st[0]), list(st[1]), list(st[2])
    clock_names = [c for _, c in lay.clocks]
    for inst, edge in moves:
        t = net.templates[inst]
        locs[inst] = [loc.id for loc in t.locations].index(edge.target)
        for u in edge.update:
            v = E.evaluate(u.value, _env(net, lay, (tuple(locs), tuple(clocks), tuple(values))))
            if u.target in clock_names:
                k = clock_names.index(u.target)
                clocks[k] = min(v, lay.caps[k])
            else:
                values[lay.variables.index(u.target)] = v
    return (tuple(locs), tuple(clocks), tuple(values))


def _invariants_ok(net, lay, st) -> bool:
    return all(_truth(t.locations[st[0][i]].invariant, net, lay, st) for i, t in enumerate(net.templates))


def _committed(net, st) -> list:
    return [t.locations[st[0][i]].committed for i, t in enumerate(net.templates)]


def _next_states(net, lay, st) -> set:
    out = set()
    committed = _committed(net, st)
    urgent = any(committed)
    active = []
    for i, t in enumerate(net.templates):
        here = t.locations[st[0][i]].id
        active.append([e for e in t.edges if e.source == here and _truth(e.guard, net, lay, st)])
    # internal moves
    for i, edges in enumerate(active):
        for e in edges:
            if e.sync is None and (not urgent or committed[i]):
                nxt = _apply(net, lay, st, [(i, e)])
                if _invariants_ok(net, lay, nxt):
                    out.add(nxt)
    # handshakes
    n = len(net.templates)
    for i, j in product(range(n), range(n)):
        if i == j:
            continue
        for e, r in product(active[i], active[j]):
            if e.sync is None or r.sync is None:
                continue
            if e.sync[1] != "!" or r.sync != (e.sync[0], "?"):
                continue
            if urgent and not (committed[i] or committed[j]):
                continue
            nxt = _apply(net, lay, st, [(i, e), (j, r)])
            if _invariants_ok(net, lay, nxt):
                out.add(nxt)
    # time
    if not urgent:
        nxt = (st[0], tuple(min(c + 1, cap) for c, cap in zip(st[1], lay.caps)), st[2])
        if _invariants_ok(net, lay, nxt):
            out.add(nxt)
    return out


def reachable_states(net: Network, requester=None, bindings=None, cap: int = DEFAULT_CAP) -> set:
    lay = layout(net)
    reach = {init_state(net, requester, bindings)}
    frontier = set(reach)
    while frontier:
        new = set()
        for st in frontier:
            new |= _next_states(net, lay, st)
        frontier = new - reach
        reach |= frontier
        if len(reach) > cap:
            raise OracleCapExceeded(f"more than {cap} reachable states")
    return reach


def _verdict(net, lay, q: Query, reach) -> Verdict:
    if q.form == "E<>":
        holds = any(_truth(q.rhs, net, lay, st) for st in reach)
    else:
        lhs = q.lhs if q.lhs is not None else E.TRUE
        holds = not any(_truth(lhs, net, lay, st) and not _truth(q.rhs, net, lay, st) for st in reach)
    return Verdict(holds, None, len(reach), False)


def brute_force_oracle(net: Network, q: Query, requester=None, bindings=None, cap: int = DEFAULT_CAP) -> Verdict:
    reach = reachable_states(net, requester, bindings, cap)
    return _verdict(net, layout(net), q, reach)


def oracle_verdicts(net: Network, queries, requester=None, bindings=None, cap: int = DEFAULT_CAP) -> list:
    """Like ``brute_force_oracle`` for many queries, enumerating states once."""
    reach = reachable_states(net, requester, bindings, cap)
    lay = layout(net)
    return [_verdict(net, lay, q, reach) for q in queries]
