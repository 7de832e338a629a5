import subprocess
import sys

import pytest

from ctxsvc.cli import main

from conftest import EXAMPLE2_EXPR, FIXTURES

ROADSIDE = str(FIXTURES / "roadside")
ROADSIDE_OPTS = str(FIXTURES / "roadside" / "options.yaml")
ARTIFACTS = ("composite.svc", "flows.txt", "model.xml", "model.q", "report.txt")


def run(*argv):
    return main([str(a) for a in argv])


def test_pipeline_writes_artifacts(tmp_path):
    assert run("pipeline", "--catalog", ROADSIDE, "--options", ROADSIDE_OPTS, "--out", tmp_path) == 0
    for name in ARTIFACTS:
        assert (tmp_path / name).is_file()
    assert (tmp_path / "report.txt").read_text().rstrip().endswith("24/24 queries pass")


def test_pipeline_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run("pipeline", "--catalog", ROADSIDE, "--options", ROADSIDE_OPTS, "--out", out) == 0
    for name in ARTIFACTS:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_flatten_to_stdout(capsys):
    assert run("flatten", "--expr", EXAMPLE2_EXPR, "--unroll", 1) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8 and lines[0] == "[c1]A >> C `>> D"


def test_expression_from_file(tmp_path, capsys):
    path = tmp_path / "expr.txt"
    path.write_text("A || B\n")
    assert run("flatten", "--expr", f"@{path}") == 0
    assert capsys.readouterr().out == "A `>> B\nB `>> A\n"


def test_validate_clean(capsys):
    assert run("validate", "--catalog", ROADSIDE) == 0
    assert capsys.readouterr().out == "CarRental: ok\nRepairShop: ok\nTowTruck: ok\n"


def test_validate_reports_violations(tmp_path, capsys):
    text = (FIXTURES / "roadside" / "RepairShop.svc").read_text()
    (tmp_path / "bad.svc").write_text(text.replace("carType==toyota, ", "Deposit==1, Deposit==2, "))
    assert run("validate", "--catalog", tmp_path) == 3
    assert "legal-conflict" in capsys.readouterr().out


def test_parse_error(capsys):
    assert run("flatten", "--expr", "A >>") == 2
    assert "expression" in capsys.readouterr().err


def test_spec_error(tmp_path):
    (tmp_path / "bad.svc").write_text("service: [A")
    assert run("validate", "--catalog", tmp_path) == 2


def test_unknown_service():
    assert run("compose", "--catalog", ROADSIDE, "--expr", "RepairShop >> Nowhere") == 2


def test_composition_error(tmp_path):
    for name in ("RepairShop", "TowTruck"):
        text = (FIXTURES / "roadside" / f"{name}.svc").read_text()
        if name == "TowTruck":
            text = text.replace("currency: dollar", "currency: euro")
        (tmp_path / f"{name}.svc").write_text(text)
    assert run("compose", "--catalog", tmp_path, "--expr", "RepairShop >> TowTruck") == 4


def test_failing_query(tmp_path):
    opts = tmp_path / "opts.yaml"
    opts.write_text(open(ROADSIDE_OPTS).read().replace("membership: caa", "membership: aaa"))
    assert run("verify", "--catalog", ROADSIDE, "--options", opts, "--out", tmp_path) == 5
    report = (tmp_path / "report.txt").read_text()
    assert "FAIL         E<> M.Final_1" in report


def test_inconclusive(tmp_path):
    assert run("verify", "--catalog", ROADSIDE, "--options", ROADSIDE_OPTS, "--bound", 3, "--out", tmp_path) == 6


def test_machine_report(tmp_path):
    assert run("verify", "--catalog", ROADSIDE, "--options", ROADSIDE_OPTS, "--format", "machine", "--out", tmp_path) == 0
    lines = (tmp_path / "report.jsonl").read_text().splitlines()
    assert len(lines) == 24 and '"verdict": "PASS"' in lines[0]


def test_missing_binding_is_reported(tmp_path):
    opts = tmp_path / "opts.yaml"
    opts.write_text(open(ROADSIDE_OPTS).read().replace("  carType: toyota\n", ""))
    assert run("verify", "--catalog", ROADSIDE, "--options", opts) == 4


@pytest.mark.parametrize("argv", [["transform", "--catalog", ROADSIDE, "--options", ROADSIDE_OPTS], ["flatten"]])
def test_usage_errors(argv):
    assert run(*argv) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "ctxsvc.cli", "flatten", "--expr", "A >> B"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and proc.stdout == "A >> B\n"
