"""Command-line front end.

    ctxsvc validate  --catalog specs/
    ctxsvc flatten   --expr "(if (c1) A else B) >> (C || D)" --unroll 1
    ctxsvc compose   --catalog specs/ --options run.yaml --out build/
    ctxsvc transform --catalog specs/ --options run.yaml --out build/
    ctxsvc verify    --catalog specs/ --options run.yaml --bound 100000
    ctxsvc pipeline  --catalog specs/ --options run.yaml --out build/

Exit codes: 0 success, 2 parse error, 3 validation violations,
4 composition or generation error, 5 a query failed, 6 a query was inconclusive.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import expr as E
from .checker import DEFAULT_BOUND, check_all, machine_report, text_report
from .composition.expression import CompositionSyntaxError, UnknownService, parse_composition_expr
from .composition.options import OptionsError, RunOptions, load_options
from .composition.semantics import CompositionError, compose
from .flatten import flatten, flow_signature
from .specfile import SpecError, load_catalog, serialize_service
from .tagen import GenerationError, MissingBinding, build_network, gen_queries
from .trust import TrustError
from .uppaal import export_model, export_queries, write_text
from .validate import validate_service

log = logging.getLogger("ctxsvc")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_COMPOSITION = 4
EXIT_FAIL = 5
EXIT_INCONCLUSIVE = 6

COMMANDS = ("validate", "compose", "flatten", "transform", "verify", "pipeline")


class Abort(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctxsvc", description="Compose and verify services with context-dependent contracts.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--catalog", nargs="+", default=[], metavar="PATH", help="service spec files or directories of *.svc")
    p.add_argument("--expr", help="composition expression, or @file to read it from a file")
    p.add_argument("--options", help="composition-options document (YAML)")
    p.add_argument("--out", help="output directory for artifacts")
    p.add_argument("--bound", type=int, default=None, help=f"state bound for verification (default {DEFAULT_BOUND})")
    p.add_argument("--unroll", type=int, default=None, help="loop unrolling bound (overrides the options document)")
    p.add_argument("--format", choices=("text", "machine"), default="text", help="verification report format")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


# ------------------------------------------------------------------ stages


class Run:
    def __init__(self, args):
        self.args = args
        self.out = Path(args.out) if args.out else None
        try:
            self.options = load_options(args.options) if args.options else RunOptions()
        except (OSError, OptionsError) as exc:
            raise Abort(EXIT_PARSE, f"options: {exc}") from None
        if args.unroll is not None:
            if args.unroll < 1:
                raise Abort(EXIT_PARSE, "--unroll must be at least 1")
            self.options = self.options.with_overrides(unroll=args.unroll)
        self.bound = args.bound if args.bound is not None else DEFAULT_BOUND
        if self.bound < 1:
            raise Abort(EXIT_PARSE, "--bound must be at least 1")
        self._catalog = None
        self._result = None

    # inputs

    @property
    def catalog(self) -> dict:
        if self._catalog is None:
            if not self.args.catalog:
                raise Abort(EXIT_PARSE, "--catalog is required for this command")
            try:
                self._catalog = load_catalog(self.args.catalog)
            except SpecError as exc:
                raise Abort(EXIT_PARSE, f"spec: {exc}") from None
            except OSError as exc:
                raise Abort(EXIT_PARSE, f"cannot read catalog: {exc}") from None
        return self._catalog

    def expression_text(self) -> str:
        text = self.args.expr
        if text is None:
            text = self.options.expression
        if text is None:
            raise Abort(EXIT_PARSE, "no composition expression (use --expr or 'expression' in the options)")
        if text.startswith("@"):
            try:
                text = Path(text[1:]).read_text(encoding="utf-8").strip()
            except OSError as exc:
                raise Abort(EXIT_PARSE, f"cannot read expression file: {exc}") from None
        return text

    def expression(self, with_catalog: bool = True):
        try:
            return parse_composition_expr(self.expression_text(), self.catalog if with_catalog else None)
        except (CompositionSyntaxError, UnknownService) as exc:
            raise Abort(EXIT_PARSE, f"expression: {exc}") from None

    def emit(self, name: str, text: str) -> None:
        if self.out is None:
            sys.stdout.write(text)
            return
        self.out.mkdir(parents=True, exist_ok=True)
        write_text(self.out / name, text)
        log.info("wrote %s", self.out / name)

    # stages

    def validate(self) -> int:
        lines = []
        bad = 0
        for name in sorted(self.catalog):
            violations = validate_service(self.catalog[name])
            bad += len(violations)
            if not violations:
                lines.append(f"{name}: ok")
            for v in violations:
                lines.append(f"{name}: {v.kind}: {v.message}")
        sys.stdout.write("\n".join(lines) + "\n")
        return EXIT_VALIDATION if bad else EXIT_OK

    def result(self):
        if self._result is None:
            o = self.options
            try:
                self._result = compose(self.expression(), self.catalog, o.seq, o.unroll, o.bindings)
            except (CompositionError, TrustError) as exc:
                raise Abort(EXIT_COMPOSITION, f"composition: {exc}") from None
        return self._result

    def compose(self) -> int:
        self.emit("composite.svc", serialize_service(self.result().composite))
        return EXIT_OK

    def flatten(self) -> int:
        if self.args.catalog:
            expr = self.expression()
        else:
            expr = self.expression(with_catalog=False)
        flows = flatten(expr, self.options.unroll)
        self.emit("flows.txt", "".join(flow_signature(f) + "\n" for f in flows))
        return EXIT_OK

    def network(self):
        o = self.options
        try:
            net = build_network(self.result(), o.bindings, o.requester)
            queries = gen_queries(self.result(), net, o.bindings, o.bounds, o.legal_requirements)
        except GenerationError as exc:
            raise Abort(EXIT_COMPOSITION, f"generation: {exc}") from None
        return net, queries

    def transform(self) -> int:
        if self.out is None:
            raise Abort(EXIT_PARSE, "transform needs --out")
        net, queries = self.network()
        self.emit("model.xml", export_model(net))
        self.emit("model.q", export_queries(queries))
        return EXIT_OK

    def verify(self) -> int:
        net, queries = self.network()
        o = self.options
        try:
            results = check_all(net, queries, o.requester, o.bindings, self.bound)
        except MissingBinding as exc:
            raise Abort(EXIT_COMPOSITION, f"verification: {exc}") from None
        if self.args.format == "machine":
            self.emit("report.jsonl", machine_report(results))
        else:
            self.emit("report.txt", text_report(net, results))
        statuses = {r.verdict.status for r in results}
        if "FAIL" in statuses:
            return EXIT_FAIL
        if "INCONCLUSIVE" in statuses:
            return EXIT_INCONCLUSIVE
        return EXIT_OK

    def pipeline(self) -> int:
        if self.out is None:
            raise Abort(EXIT_PARSE, "pipeline needs --out")
        code = self.validate()
        if code:
            return code
        self.compose()
        self.flatten()
        self.transform()
        return self.verify()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        run = Run(args)
        return getattr(run, args.command)()
    except Abort as exc:
        print(f"ctxsvc: {exc}", file=sys.stderr)
        return exc.code
    except E.ExprError as exc:
        print(f"ctxsvc: {exc}", file=sys.stderr)
        return EXIT_COMPOSITION


if __name__ == "__main__":
    sys.exit(main())
