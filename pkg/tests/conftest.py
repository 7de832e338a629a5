import os
from dataclasses import dataclass, replace
from pathlib import Path

import pytest

from ctxsvc.composition.expression import parse_composition_expr
from ctxsvc.composition.options import load_options
from ctxsvc.composition.semantics import compose
from ctxsvc.specfile import load_catalog
from ctxsvc.tagen import build_network, gen_queries

HERE = Path(__file__).parent
FIXTURES = HERE / "fixtures"
GOLDEN = HERE / "golden"

EXAMPLE2_EXPR = "(if (c1) A else B) >> (C || D) >> while (c2) F"


@dataclass
class Built:
    catalog: dict
    options: object
    result: object
    net: object
    queries: list


def build(name: str, bindings=None, requester=None, **overrides) -> Built:
    """Load a fixture directory and run it through composition and generation."""
    d = FIXTURES / name
    catalog = load_catalog([d])
    opts = load_options(d / "options.yaml")
    if bindings is not None:
        opts = replace(opts, bindings=bindings)
    if requester is not None:
        opts = replace(opts, requester=requester)
    if overrides:
        opts = replace(opts, **overrides)
    result = compose(parse_composition_expr(opts.expression, catalog), catalog, opts.seq, opts.unroll, opts.bindings)
    net = build_network(result, opts.bindings, opts.requester)
    queries = gen_queries(result, net, opts.bindings, opts.bounds, opts.legal_requirements)
    return Built(catalog, opts, result, net, queries)


@pytest.fixture(scope="session")
def roadside() -> Built:
    return build("roadside")


@pytest.fixture(scope="session")
def example2() -> Built:
    return build("example2")


@pytest.fixture(scope="session")
def example3_catalog() -> dict:
    return load_catalog([FIXTURES / "example3"])


def check_golden(name: str, text: str) -> None:
    """Compare ``text`` with a committed golden file (CTXSVC_UPDATE_GOLDEN=1 rewrites it)."""
    path = GOLDEN / name
    if os.environ.get("CTXSVC_UPDATE_GOLDEN"):
        path.parent.mkdir(exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
    assert path.exists(), f"missing golden file {path}"
    assert text == path.read_text(encoding="utf-8")


# acceptance criteria report their outcome here; printed after the run
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
