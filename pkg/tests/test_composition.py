import logging

import pytest

from ctxsvc import expr as E
from ctxsvc.composition.expression import UnknownService, parse_composition_expr
from ctxsvc.composition.options import OptionsError, parse_options
from ctxsvc.composition.semantics import (
    CompositionError,
    SeqOptions,
    combine_price,
    compose,
    compose_along_flow,
    merge_context,
    price_value,
    seq_compose,
)
from ctxsvc.flatten import flatten
from ctxsvc.model import ConfiguredService, Context, ContextInfo, Price, ServiceFunction, Contract, parse_type
from ctxsvc.specfile import load_catalog, parse_service_spec

from conftest import EXAMPLE2_EXPR, FIXTURES


def texts(exprs):
    return [E.to_text(e) for e in exprs]


@pytest.fixture()
def rs_tt(example3_catalog):
    return seq_compose(example3_catalog["rs"], example3_catalog["tt"])


def test_example3_function(rs_tt):
    f = rs_tt.function
    assert rs_tt.name == "rs⌢tt"
    assert f.name == "ReserveRS⌢ReserveTT"
    assert f.result_name == "ResultRS⌢ResultTT"
    assert f.address == ("XXX", "YYY")
    assert set(f.inputs) == {"CarBroken", "deposit", "CarType", "failureType", "RequestTruck"}
    assert set(f.outputs) == {"HasAppointment", "numberOfHours", "RequestConfi"}
    assert set(texts(f.pre)) == {"CarBroken==true", "RequestTruck==true"}
    assert set(texts(f.post)) == {"HasAppointment==true", "RequestConfi==true"}


def test_example3_contract(rs_tt):
    assert set(texts(rs_tt.contract.legal)) == {"deposit:=300", "CarType==toyota"}
    assert texts(rs_tt.context.rules) == ["ctx.membership==caa"]
    assert rs_tt.context.info.entries == (("Location", ("Montreal", "Canada")),)
    price = rs_tt.nonfunctional.price
    assert E.to_text(price.amount) == "(60*numberOfHours)+100"
    assert (price.currency, price.unit) == ("dollar", "oneTime")
    assert price_value(price, rs_tt, {"numberOfHours": 5}) == 400


def test_outputs_of_a_are_not_inputs_of_the_composite():
    catalog = load_catalog([FIXTURES / "example2"])
    ac = seq_compose(catalog["A"], catalog["C"])
    assert ac.function.inputs == ("orderId",)
    assert ac.function.outputs == ("quoteA", "shipC")


def test_satisfied_preconditions_of_b_are_dropped():
    a = ConfiguredService("a", contract=Contract(ServiceFunction("fa", post=(E.parse("x==true"),))))
    b = ConfiguredService("b", contract=Contract(ServiceFunction("fb", pre=(E.parse("x==true"), E.parse("y==true")))))
    assert texts(seq_compose(a, b).function.pre) == ["y==true"]
    assert texts(seq_compose(a, b, SeqOptions(b_requires_more=False)).function.pre) == []


def test_unobservable_postconditions():
    a = ConfiguredService("a", contract=Contract(ServiceFunction("fa", post=(E.parse("p==true"),))))
    b = ConfiguredService("b", contract=Contract(ServiceFunction("fb", post=(E.parse("q==true"),))))
    assert texts(seq_compose(a, b, SeqOptions(po_a_observable=False)).function.post) == ["q==true"]


def test_neutral_operand(example3_catalog):
    rs = example3_catalog["rs"]
    e = ConfiguredService("e", contract=Contract(ServiceFunction("fe", address=("ZZZ",))))
    out = seq_compose(rs, e)
    assert out.function.inputs == rs.function.inputs
    assert out.function.outputs == rs.function.outputs
    assert out.function.pre == rs.function.pre and out.function.post == rs.function.post
    assert out.function.name == "ReserveRS⌢fe"
    assert out.function.address == ("XXX", "ZZZ")


@pytest.mark.parametrize("mode, expected", [("normal", 180), ("promotional", 100), ("special_sale", 80)])
def test_price_modes(mode, expected):
    p = combine_price(Price(E.Lit(100), "dollar", "oneTime"), Price(E.Lit(80), "dollar", "oneTime"), mode)
    assert p.amount == E.Lit(expected)


def test_symbolic_promotional_price(example3_catalog):
    rs, tt = example3_catalog["rs"], example3_catalog["tt"]
    p = combine_price(rs.nonfunctional.price, tt.nonfunctional.price, "promotional")
    assert E.to_text(p.amount) == "max(60*numberOfHours,100)"
    p = combine_price(rs.nonfunctional.price, tt.nonfunctional.price, "special_sale")
    assert E.to_text(p.amount) == "min(60*numberOfHours,100)"


def test_currency_mismatch():
    with pytest.raises(CompositionError):
        combine_price(Price(E.Lit(1), "dollar", "oneTime"), Price(E.Lit(1), "euro", "oneTime"))


def test_rate_without_quantity():
    with pytest.raises(CompositionError):
        combine_price(Price(E.Lit(60), "dollar", "hour"), Price(E.Lit(1), "dollar", "oneTime"))


def test_context_merge_b_wins(caplog):
    loc = parse_type("tuple(string, string)")
    a = Context((), ContextInfo((("Location", ("Montreal", "Canada")),), (("Location", loc),)))
    b = Context((), ContextInfo((("Location", ("Toronto", "Canada")),), (("Location", loc),)))
    with caplog.at_level(logging.WARNING):
        merged = merge_context(a, b)
    assert merged.info.tags() == {"Location": ("Toronto", "Canada")}
    assert any("Location" in r.getMessage() for r in caplog.records)


def test_context_merge_with_empty():
    b = Context((E.parse("ctx.age>=21"),), ContextInfo((("city", "Montreal"),)))
    assert merge_context(Context(), b) == b


def test_context_merge_type_clash():
    a = Context((), ContextInfo((("d", 1),), (("d", parse_type("int")),)))
    b = Context((), ContextInfo((("d", "x"),), (("d", parse_type("string")),)))
    with pytest.raises(CompositionError):
        merge_context(a, b)


def test_legal_conflict_is_a_composition_error():
    text = (FIXTURES / "roadside" / "RepairShop.svc").read_text()
    other = parse_service_spec(text.replace("service: RepairShop", "service: Other").replace("carType==toyota", "carType==honda"))
    with pytest.raises(CompositionError):
        seq_compose(parse_service_spec(text), other)


def test_fold_along_flow_adds_guards():
    catalog = load_catalog([FIXTURES / "example2"])
    flow = flatten(parse_composition_expr(EXAMPLE2_EXPR), 1)[1]
    svc = compose_along_flow(flow, catalog)
    assert svc.name == "A⌢C⌢D⌢F"
    assert set(texts(svc.function.pre)) >= {"c1", "c2"}
    assert svc.nonfunctional.safety_time == 4 + 5 + 9 + 2


def test_example2_worst_case(example2):
    r = example2.result
    assert len(r.per_flow) == 8
    nf = r.composite.nonfunctional
    # worst flow per field, computed by hand from the fixture table
    assert price_value(nf.price, r.composite, {}) == 100 + 50 + 70 + 10
    assert nf.safety_time == 6 + 5 + 9 + 2
    assert nf.reliability == 10
    assert nf.availability == 4


def test_roadside_price(roadside):
    r = roadside.result
    assert E.to_text(r.composite.nonfunctional.price.amount) == "(60*numberOfHours)+100+(40*rentalDays)"
    assert price_value(r.composite.nonfunctional.price, r.composite, roadside.options.bindings) == 300 + 100 + 120


def test_single_flow_composite_is_the_fold(roadside):
    r = roadside.result
    assert r.composite == r.per_flow[0][1]


def test_options_document():
    o = parse_options("expression: A >> B\npricing_mode: promotional\nbounds: {price: 10}\n")
    assert o.seq.pricing_mode == "promotional"
    assert o.bounds == {"price": 10}
    with pytest.raises(OptionsError):
        parse_options("expresion: A\n")
    with pytest.raises(OptionsError):
        parse_options("pricing_mode: cheap\n")


def test_compose_rejects_unknown_services():
    catalog = load_catalog([FIXTURES / "example2"])
    with pytest.raises(UnknownService):
        compose(parse_composition_expr("A >> Z"), catalog)
