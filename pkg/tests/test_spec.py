import pytest

from ctxsvc import expr as E
from ctxsvc.model import ContextInfo, Environment, eval_constraint, parse_type
from ctxsvc.specfile import (
    DuplicateNameError,
    SpecSyntaxError,
    UnknownTypeError,
    load_catalog,
    parse_service_spec,
    parse_service_specs,
    serialize_service,
    serialize_services,
)

from conftest import FIXTURES

A_SVC = (FIXTURES / "example2" / "A.svc").read_text()


@pytest.mark.parametrize("path", sorted(FIXTURES.glob("*/*.svc")), ids=lambda p: f"{p.parent.name}/{p.name}")
def test_roundtrip(path):
    s = parse_service_spec(path.read_text())
    assert parse_service_spec(serialize_service(s)) == s


def test_multi_document_roundtrip():
    services = list(load_catalog([FIXTURES / "roadside"]).values())
    assert parse_service_specs(serialize_services(services)) == services


def test_fields_of_a_fixture():
    rs = load_catalog([FIXTURES / "roadside"])["RepairShop"]
    assert rs.function.name == "ScheduleApt"
    assert rs.function.result_name == "AptConfirmed"
    assert rs.function.inputs == ("carType", "failureType")
    assert rs.param("carType").dtype.values == ("toyota", "honda", "ford")
    assert rs.context.info.tags() == {"Location": ("Montreal", "Canada")}
    assert rs.nonfunctional.price.per == "numberOfHours"
    assert [E.to_text(r) for r in rs.contract.legal] == ["carType==toyota", "Deposit:=Deposit+300"]


@pytest.mark.parametrize(
    "old, new, error",
    [
        ("type: int, direction: input", "type: integer, direction: input", UnknownTypeError),
        ("quoteA, type: int", "orderId, type: int", DuplicateNameError),
        ("ctx.tier>=1", "ctx.tier>=", SpecSyntaxError),
        ("direction: output", "direction: sideways", SpecSyntaxError),
        ("service: A\n", "", SpecSyntaxError),
    ],
)
def test_spec_errors(old, new, error):
    with pytest.raises(error):
        parse_service_spec(A_SVC.replace(old, new))


def test_errors_carry_position():
    with pytest.raises(UnknownTypeError, match=r"line 3, column \d+"):
        parse_service_spec(A_SVC.replace("type: int, direction: input", "type: integer, direction: input"))


def test_yaml_syntax_error():
    with pytest.raises(SpecSyntaxError):
        parse_service_spec("service: [A")


def test_catalog_rejects_duplicate_services(tmp_path):
    (tmp_path / "one.svc").write_text(A_SVC)
    (tmp_path / "two.svc").write_text(A_SVC)
    with pytest.raises(DuplicateNameError):
        load_catalog([tmp_path])


@pytest.mark.parametrize(
    "text, value, ok",
    [
        ("int", 3, True),
        ("int", 3.5, False),
        ("bool", True, True),
        ("double", 2, True),
        ("enum(Membership: caa, aaa)", "caa", True),
        ("enum(Membership: caa, aaa)", "amex", False),
        ("tuple(string, string)", ("Montreal", "Canada"), True),
        ("tuple(string, string)", ("Montreal",), False),
    ],
)
def test_type_conformance(text, value, ok):
    assert parse_type(text).conforms(value) is ok


def test_environment_lookup():
    rs = load_catalog([FIXTURES / "roadside"])["RepairShop"]
    env = Environment.for_service(rs, {"carType": "toyota"}, {"membership": "caa"})
    assert eval_constraint(E.parse("carType==toyota"), env) is True
    assert eval_constraint(E.parse("ctx.membership==caa"), env) is True
    assert ContextInfo.of({"a": 1}).dims() == ["a"]
