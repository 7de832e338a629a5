"""Composition-options documents (YAML).

Example::

    expression: RepairShop >> TowTruck >> CarRental
    pricing_mode: normal          # normal | promotional | special_sale
    trust_logic: b_requires_a     # b_requires_a | a_leads_to_b | packaged
    trust_aggregator: glb         # avg | choose | glb | lub
    po_a_observable: true
    b_requires_more: true
    unroll_bound: 1
    seed: 0
    bindings: {numberOfHours: 5}
    requester: {membership: caa, age: 25}
    bounds: {price: 600}          # price | time | availability | reliability
    legal_requirements: [400>=Deposit]
    packaged_trust: {ce: [[alice, 4]], pg: true, re: []}
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .. import expr as E
from ..model import ProviderTrust
from .semantics import SeqOptions

KEYS = (
    "expression",
    "pricing_mode",
    "trust_logic",
    "trust_aggregator",
    "po_a_observable",
    "b_requires_more",
    "unroll_bound",
    "seed",
    "bindings",
    "requester",
    "bounds",
    "legal_requirements",
    "packaged_trust",
)
BOUND_KINDS = ("price", "time", "availability", "reliability")


class OptionsError(Exception):
    pass


@dataclass(frozen=True)
class RunOptions:
    seq: SeqOptions = field(default_factory=SeqOptions)
    expression: Optional[str] = None
    unroll: int = 1
    bindings: dict = field(default_factory=dict)
    requester: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    legal_requirements: tuple = ()

    def with_overrides(self, **changes) -> "RunOptions":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)


def _trust_pairs(value, where) -> tuple:
    out = []
    for pair in value or ():
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise OptionsError(f"{where}: expected [name, grade] pairs")
        out.append((str(pair[0]), pair[1]))
    return tuple(out)


def parse_options(text: str) -> RunOptions:
    try:
        doc = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise OptionsError(f"options document is not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise OptionsError("options document must be a mapping")
    unknown = sorted(set(doc) - set(KEYS))
    if unknown:
        raise OptionsError(f"unknown option(s): {', '.join(unknown)}")

    packaged = None
    if doc.get("packaged_trust") is not None:
        pt = doc["packaged_trust"]
        packaged = ProviderTrust(
            _trust_pairs(pt.get("ce"), "packaged_trust.ce"),
            bool(pt.get("pg", False)),
            _trust_pairs(pt.get("re"), "packaged_trust.re"),
        )
    try:
        seq = SeqOptions(
            pricing_mode=doc.get("pricing_mode", "normal"),
            trust_logic=doc.get("trust_logic", "b_requires_a"),
            trust_aggregator=doc.get("trust_aggregator", "glb"),
            po_a_observable=bool(doc.get("po_a_observable", True)),
            b_requires_more=bool(doc.get("b_requires_more", True)),
            packaged_trust=packaged,
            seed=int(doc.get("seed", 0)),
        )
    except ValueError as exc:
        raise OptionsError(str(exc)) from None

    unroll = doc.get("unroll_bound", 1)
    if not isinstance(unroll, int) or isinstance(unroll, bool) or unroll < 1:
        raise OptionsError("unroll_bound must be a positive integer")
    bounds = dict(doc.get("bounds") or {})
    bad = sorted(set(bounds) - set(BOUND_KINDS))
    if bad:
        raise OptionsError(f"unknown bound kind(s): {', '.join(bad)}")
    legal = []
    for text_ in doc.get("legal_requirements") or ():
        try:
            legal.append(E.parse(str(text_)))
        except E.ExprSyntaxError as exc:
            raise OptionsError(f"legal requirement {text_!r}: {exc}") from None
    expression = doc.get("expression")
    return RunOptions(
        seq=seq,
        expression=str(expression) if expression is not None else None,
        unroll=unroll,
        bindings=dict(doc.get("bindings") or {}),
        requester=dict(doc.get("requester") or {}),
        bounds=bounds,
        legal_requirements=tuple(legal),
    )


def load_options(path) -> RunOptions:
    return parse_options(Path(path).read_text(encoding="utf-8"))


def binding_value(value: Any) -> Any:
    """YAML scalars as evaluation values (lists become tuples)."""
    if isinstance(value, list):
        return tuple(binding_value(v) for v in value)
    return value
