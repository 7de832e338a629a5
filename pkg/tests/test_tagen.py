import json
import re

import pytest

from ctxsvc import expr as E
from ctxsvc.composition.expression import parse_composition_expr
from ctxsvc.composition.semantics import compose, price_value
from ctxsvc.model import ConfiguredService, Contract, Nonfunctional, ServiceFunction
from ctxsvc.specfile import load_catalog, parse_service_spec
from ctxsvc.tagen import (
    INITIAL,
    build_network,
    gen_queries,
    gen_service_template,
    network_summary,
    path_var,
)

from conftest import FIXTURES, build, check_golden


def guard_text(edge):
    return [E.to_text(c) for c in E.conjuncts(edge.guard)]


def test_roadside_golden_network(roadside):
    check_golden("roadside_network.json", json.dumps(network_summary(roadside.net), indent=1, ensure_ascii=False) + "\n")


def test_four_templates(roadside):
    assert [t.name for t in roadside.net.templates] == ["M", "CarRental", "RepairShop", "TowTruck"]


def test_repair_shop_template(roadside):
    t = roadside.net.template("RepairShop")
    assert [loc.id for loc in t.locations] == ["idle", "RepairShopProcessing"]
    e1, e2 = t.edges
    assert (e1.source, e1.target, e1.sync) == ("idle", "RepairShopProcessing", ("ScheduleApt", "?"))
    assert guard_text(e1) == [
        "RequesterContext.membership==1",
        "CarBroken==true",
        "carType==toyota",
        "carTypeB",
        "failureTypeB",
    ]
    assert (e2.source, e2.target, e2.sync) == ("RepairShopProcessing", "idle", ("AptConfirmed", "!"))
    assert [E.to_text(u) for u in e2.update] == ["HasAppointment:=true", "NumOfDaysB:=true", "Deposit:=Deposit+300"]


def test_membership_code_is_declared(roadside):
    assert ("membership", (("caa", 1), ("aaa", 2))) in roadside.net.decls.ctx_codes


def test_six_channels(roadside):
    assert set(roadside.net.decls.channels) == {
        "ScheduleApt", "AptConfirmed", "RequestTow", "TowConfirmed", "RentCar", "RentalConfirmed",
    }


def test_path_quadruples(example2):
    names = {v.name for v in example2.net.decls.variables if v.group == "path"}
    assert len(names) == 8 * 4
    assert path_var(1, "Price") == "firstPathPrice"


def test_true_initialised_flags():
    # 2 preconditions + 3 inputs give 5 true booleans
    text = (FIXTURES / "roadside" / "RepairShop.svc").read_text()
    text = text.replace("pre: [CarBroken==true]", "pre: [CarBroken==true, Insured==true]")
    text = text.replace("inputs: [carType, failureType]", "inputs: [carType, failureType, numberOfHours]")
    text = text.replace("- {name: CarBroken,", "- {name: Insured, type: bool, direction: input}\n- {name: CarBroken,")
    svc = parse_service_spec(text)
    r = compose(parse_composition_expr("RepairShop"), {"RepairShop": svc})
    decls = build_network(r, {"carType": "toyota", "failureType": "x", "numberOfHours": 2}).decls
    flags = [v for v in decls.variables if v.group in ("pre", "input")]
    assert len(flags) == 5 and all(v.init is True for v in flags)


def test_empty_guard_is_true():
    bare = ConfiguredService("Bare", contract=Contract(ServiceFunction("CallBare", result_name="DoneBare")))
    t = gen_service_template(bare)
    assert t.edges[0].guard == E.TRUE
    assert t.edges[1].update == ()


def test_single_service_price():
    catalog = load_catalog([FIXTURES / "roadside"])
    r = compose(parse_composition_expr("TowTruck"), catalog)
    net = build_network(r, {"carLocation": "x"})
    main = net.main
    assert len(main.locations) == 3
    done = [e for e in main.edges if e.target == "Final_1"]
    assert len(done) == 1
    price = [u for u in done[0].update if u.target == "firstPathPrice"]
    assert [E.to_text(u) for u in price] == ["firstPathPrice:=firstPathPrice+100"]


def test_parallel_exception(example2):
    main = example2.net.main
    # flow 1 is [c1]A >> C `>> D with C's bound 5 and D's bound 9
    c = main.location("f1s2_C")
    d = main.location("f1s3_D")
    assert c.committed and c.invariant is None
    assert not d.committed and E.to_text(d.invariant) == "x_f1s3<=9"


def test_flow_guards_on_edges(example2):
    main = example2.net.main
    first = [e for e in main.edges if e.source == INITIAL]
    assert [guard_text(e)[0] for e in first] == ["c1", "c1", "c1", "c1", "!c1", "!c1", "!c1", "!c1"]
    last = [e for e in main.edges if e.target == "Final_1"][0]
    assert "!c2" in guard_text(last)


# ------------------------------------------------------------ properties


@pytest.fixture(params=["roadside", "example2"])
def built(request):
    return build(request.param)


def test_template_shape(built):
    net = built.net
    for t in net.templates[1:]:
        assert len(t.locations) == 2 and len(t.edges) == 2
    steps = sum(len(f.steps) for f in built.result.flows)
    assert len(net.main.locations) == 1 + 2 * steps


def test_channel_pairing(built):
    main_syncs = {e.sync for e in built.net.main.edges if e.sync}
    for t in built.net.templates[1:]:
        for e in t.edges:
            ch, d = e.sync
            assert (ch, "!" if d == "?" else "?") in main_syncs
    service_syncs = {e.sync for t in built.net.templates[1:] for e in t.edges}
    for ch, d in main_syncs:
        assert (ch, "!" if d == "?" else "?") in service_syncs


def test_guard_completeness(built):
    for svc in built.result.services:
        t = built.net.template(svc.name)
        f = svc.function
        checks = [r for r in svc.contract.legal if not isinstance(r, E.Assign)]
        expected = len(f.pre) + len(f.inputs) + len(svc.context.rules) + len(checks)
        assert len(E.conjuncts(t.edges[0].guard)) == expected


def test_clock_discipline(built):
    main = built.net.main
    for loc in main.locations:
        if loc.invariant is None:
            continue
        clocks = E.names(loc.invariant) & set(main.clocks)
        entering = [e for e in main.edges if e.target == loc.id]
        assert entering
        for e in entering:
            assert clocks <= {u.target for u in e.update}


def test_committed_only_in_parallel_groups(built):
    flows = built.result.flows
    for loc in built.net.main.locations:
        if not loc.committed:
            continue
        fi, j = map(int, re.match(r"f(\d+)s(\d+)_", loc.id).groups())
        steps = flows[fi - 1].steps
        in_group = steps[j - 1].parallel_tail or (j < len(steps) and steps[j].parallel_tail)
        assert in_group


def _path_edges(main, fi):
    out = []
    here = INITIAL
    while here != f"Final_{fi}":
        nxt = [e for e in main.edges if e.source == here and (here != INITIAL or e.target.startswith(f"f{fi}s1_"))]
        assert len(nxt) == 1
        out.append(nxt[0])
        here = nxt[0].target
    return out


def test_path_price_accounting(built):
    net, r = built.net, built.result
    bindings = built.options.bindings
    constants = dict(net.decls.constants)
    for fi, (flow, svc) in enumerate(r.per_flow, start=1):
        var = path_var(fi, "Price")
        total = 0
        for e in _path_edges(net.main, fi):
            for u in e.update:
                if u.target == var:
                    inc = E.BinOp("-", u.value, E.Name(var))
                    env = {**bindings, **constants, var: 0}
                    total += E.evaluate(inc, env.__getitem__)
        assert total == price_value(svc.nonfunctional.price, svc, bindings) * net.decls.scale


def test_query_suite_contains_the_listed_queries(roadside):
    texts = [q.text for q in roadside.queries]
    for q in [
        "E<> M.Final_1",
        "A[] M.i imply RequesterContext.age>=21",
        "A[] M.Final_1 imply firstPathPrice <= 600",
        "A[] M.Final_1 imply 400>=Deposit",
        "A[] M.i imply !NumOfDaysB",
        "A[] M.Final_1 imply NumOfDaysB",
    ]:
        assert q in texts


def test_one_reachability_query_per_flow(example2):
    reach = [q.text for q in example2.queries if q.category == "reachability"]
    assert reach == [f"E<> M.Final_{i}" for i in range(1, 9)]


def test_no_nonfunctional_queries_without_properties():
    tt = load_catalog([FIXTURES / "example3"])["tt"]
    bare = tt.with_contract(nonfunctional=Nonfunctional())
    r = compose(parse_composition_expr("tt"), {"tt": bare})
    net = build_network(r, {}, {"membership": "caa"})
    cats = {q.category for q in gen_queries(r, net, {})}
    assert cats <= {"reachability", "context", "input", "output-before", "output-after", "precondition", "postcondition"}
