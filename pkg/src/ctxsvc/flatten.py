"""Flatten composition expressions into purely sequential flows."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from . import expr as E
from .composition.expression import (
    CompositionExpr,
    Cond,
    Iter,
    NoOrder,
    NonDet,
    Par,
    Priority,
    Seq,
    ServiceRef,
    UnknownService,
    service_refs,
)
from .validate import SatisfiabilityError, constraints_jointly_satisfiable, derive_domains


@dataclass(frozen=True)
class FlowStep:
    service: str
    guards: tuple = ()
    parallel_tail: bool = False
    iteration_index: int = 0
    priority_rank: Optional[int] = None


@dataclass(frozen=True)
class Flow:
    """A sequential run of steps.

    ``exit_guards`` hold conditions that must hold when the flow ends without
    a step to carry them, e.g. the negated loop condition of a zero-iteration
    unrolling.
    """

    steps: tuple
    exit_guards: tuple = ()

    @property
    def services(self) -> list:
        return [s.service for s in self.steps]

    def guards(self) -> list:
        out = []
        for g in [g for s in self.steps for g in s.guards] + list(self.exit_guards):
            if g not in out:
                out.append(g)
        return out


def _add(guards: tuple, *new) -> tuple:
    return guards + tuple(g for g in new if g not in guards)


def _concat(a: Flow, b: Flow) -> Flow:
    return Flow(a.steps + b.steps, _add(a.exit_guards, *b.exit_guards))


def _guard_first(flow: Flow, guard: E.Expr) -> Flow:
    if not flow.steps:
        return Flow((), _add(flow.exit_guards, guard))
    first = flow.steps[0]
    return Flow((replace(first, guards=_add((guard,), *first.guards)),) + flow.steps[1:], flow.exit_guards)


def _shuffles(a: tuple, b: tuple):
    """All interleavings of ``a`` and ``b`` preserving each one's order."""
    if not a:
        yield b
        return
    if not b:
        yield a
        return
    for rest in _shuffles(a[1:], b):
        yield (a[0],) + rest
    for rest in _shuffles(a, b[1:]):
        yield (b[0],) + rest


def _mark_tail(steps: tuple) -> tuple:
    return tuple(s if i == 0 else replace(s, parallel_tail=True) for i, s in enumerate(steps))


def _priority_operands(e) -> list:
    if isinstance(e, Priority):
        return _priority_operands(e.left) + [e.right]
    return [e]


def _flatten(e: CompositionExpr, k_max: int) -> list:
    if isinstance(e, ServiceRef):
        return [Flow((FlowStep(e.name),))]
    if isinstance(e, Seq):
        left, right = _flatten(e.left, k_max), _flatten(e.right, k_max)
        return [_concat(a, b) for a in left for b in right]
    if isinstance(e, (Par, NoOrder)):
        left, right = _flatten(e.left, k_max), _flatten(e.right, k_max)
        out = []
        for a in left:
            for b in right:
                guards = _add(a.exit_guards, *b.exit_guards)
                for steps in _shuffles(a.steps, b.steps):
                    out.append(Flow(_mark_tail(steps) if isinstance(e, Par) else steps, guards))
        return out
    if isinstance(e, NonDet):
        return _flatten(e.left, k_max) + _flatten(e.right, k_max)
    if isinstance(e, Priority):
        out = []
        for rank, operand in enumerate(_priority_operands(e), start=1):
            for f in _flatten(operand, k_max):
                steps = tuple(s if s.priority_rank is not None else replace(s, priority_rank=rank) for s in f.steps)
                out.append(Flow(steps, f.exit_guards))
        return out
    if isinstance(e, Cond):
        then = [_guard_first(f, e.condition) for f in _flatten(e.then, k_max)]
        other = [_guard_first(f, E.negate(e.condition)) for f in _flatten(e.else_, k_max)]
        return then + other
    if isinstance(e, Iter):
        body = _flatten(e.body, k_max)
        out = [Flow((), (E.negate(e.condition),))]
        runs = [Flow(())]
        for k in range(1, k_max + 1):
            nxt = []
            for run in runs:
                for f in body:
                    f = _guard_first(f, e.condition)
                    steps = tuple(s if s.iteration_index else replace(s, iteration_index=k) for s in f.steps)
                    nxt.append(_concat(run, Flow(steps, f.exit_guards)))
            runs = nxt
            out.extend(runs)
        return out
    raise TypeError(f"not a composition expression: {e!r}")


def flatten(expr: CompositionExpr, unroll: int = 1, catalog: Optional[dict] = None) -> list:
    """Every sequential flow denoted by ``expr``, loops unrolled up to ``unroll`` times.

    Flows come out in structural order (left operands first), which is
    deterministic. Flows with no steps at all are dropped.
    """
    if unroll < 1:
        raise ValueError("unroll bound must be at least 1")
    if catalog is not None:
        missing = sorted({n for n in service_refs(expr) if n not in catalog})
        if missing:
            raise UnknownService(f"unknown service(s): {', '.join(missing)}")
    return [f for f in _flatten(expr, unroll) if f.steps]


def step_signature(step: FlowStep) -> str:
    guards = "".join(f"[{E.to_text(g)}]" for g in step.guards)
    suffix = f"{{{step.iteration_index}}}" if step.iteration_index else ""
    return f"{guards}{step.service}{suffix}"


def flow_signature(flow: Flow) -> str:
    parts = []
    for i, step in enumerate(flow.steps):
        if i:
            parts.append("`>>" if step.parallel_tail else ">>")
        parts.append(step_signature(step))
    return " ".join(parts)


def is_vacuous(flow: Flow, types: Optional[dict] = None) -> bool:
    """True when the flow's guards cannot hold together."""
    guards = flow.guards()
    if not guards:
        return False
    domains = derive_domains(guards, types or {})
    try:
        ok, _ = constraints_jointly_satisfiable(guards, domains)
    except SatisfiabilityError:
        return False
    return not ok
