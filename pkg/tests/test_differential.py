"""The checker's verdicts against naive enumeration of the whole state space."""

import pytest

from ctxsvc.checker import check_all, replay
from ctxsvc.composition.expression import parse_composition_expr
from ctxsvc.composition.semantics import compose
from ctxsvc.oracle import OracleCapExceeded, brute_force_oracle, oracle_verdicts, reachable_states
from ctxsvc.tagen import build_network, gen_queries

from conftest import build
from randnet import random_setup


def agree(net, queries, requester, bindings):
    results = check_all(net, queries, requester, bindings)
    reference = oracle_verdicts(net, queries, requester, bindings)
    for r, ref in zip(results, reference):
        assert r.verdict.holds == ref.holds, r.query.text
        if r.verdict.evidence is not None:
            assert replay(net, r.verdict.evidence, requester, bindings) == r.verdict.evidence.end
    return results


@pytest.mark.parametrize(
    "name, requester",
    [
        ("roadside", None),
        ("roadside", {"membership": "aaa", "age": 25}),
        ("roadside", {"membership": "caa", "age": 19}),
        ("example2", None),
    ],
)
def test_fixtures(name, requester):
    b = build(name)
    agree(b.net, b.queries, requester or b.options.requester, b.options.bindings)


@pytest.mark.parametrize("seed", range(100))
def test_random_networks(seed):
    s = random_setup(seed)
    catalog = s["catalog"]
    r = compose(parse_composition_expr(s["expression"], catalog), catalog, unroll=s["unroll"], bindings=s["bindings"])
    net = build_network(r, s["bindings"], s["requester"])
    agree(net, gen_queries(r, net, s["bindings"]), s["requester"], s["bindings"])


def test_single_query_entry_point(roadside):
    q = roadside.queries[0]
    v = brute_force_oracle(roadside.net, q, roadside.options.requester, roadside.options.bindings)
    assert v.holds is True and v.states_explored > 0


def test_cap(example2):
    with pytest.raises(OracleCapExceeded):
        reachable_states(example2.net, example2.options.requester, example2.options.bindings, cap=50)
