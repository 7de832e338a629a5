"""Provider-trust aggregation over the grade lattice 1 (Low) .. 5 (High)."""

from __future__ import annotations

import random
from typing import Iterable, Mapping, Optional

from .model import ProviderTrust

GRADES = (1, 2, 3, 4, 5)
LOW, HIGH = 1, 5

AGGREGATORS = ("avg", "choose", "glb", "lub")
LOGICS = ("b_requires_a", "a_leads_to_b", "packaged")


class TrustError(Exception):
    pass


def meet(a: int, b: int) -> int:
    return min(a, b)


def join(a: int, b: int) -> int:
    return max(a, b)


def glb(grades: Iterable[int]) -> int:
    return min(grades)


def lub(grades: Iterable[int]) -> int:
    return max(grades)


def avg(grades: Iterable[int]) -> int:
    """Mean grade rounded half up, so it stays a lattice element."""
    grades = list(grades)
    total, n = sum(grades), len(grades)
    return (2 * total + n) // (2 * n)


def choose(grades: Iterable[int], rng: random.Random) -> int:
    return rng.choice(sorted(grades))


def aggregate(grades: Iterable[int], aggregator: str, rng: Optional[random.Random] = None) -> int:
    grades = list(grades)
    if aggregator == "glb":
        return glb(grades)
    if aggregator == "lub":
        return lub(grades)
    if aggregator == "avg":
        return avg(grades)
    if aggregator == "choose":
        return choose(grades, rng or random.Random(0))
    raise TrustError(f"unknown aggregator {aggregator!r}")


def partition(a: Mapping[str, int], b: Mapping[str, int], aggregator: str, rng=None) -> tuple:
    """Split two recommendation maps into (only-a, only-b, shared-aggregated)."""
    only_a = {k: v for k, v in a.items() if k not in b}
    only_b = {k: v for k, v in b.items() if k not in a}
    shared = {k: aggregate((a[k], b[k]), aggregator, rng) for k in a if k in b}
    return only_a, only_b, shared


def _merge(a, b, logic, aggregator, rng) -> tuple:
    only_a, only_b, shared = partition(dict(a), dict(b), aggregator, rng)
    if logic == "b_requires_a":
        out = {**shared, **only_b}
        order = [k for k, _ in b]
    else:
        out = {**shared, **only_a}
        order = [k for k, _ in a]
    # shared names first in the dominating operand's order
    return tuple((k, out[k]) for k in order if k in out)


def aggregate_trust(
    tr_a: Optional[ProviderTrust],
    tr_b: Optional[ProviderTrust],
    logic: str = "b_requires_a",
    aggregator: str = "glb",
    packaged: Optional[ProviderTrust] = None,
    seed: int = 0,
) -> Optional[ProviderTrust]:
    """Trust of ``A >> B`` under one of the three business logics.

    ``b_requires_a``: whoever bought B also bought A, so B's recommendations
    dominate; ``a_leads_to_b``: A's dominate; ``packaged``: the provider
    collected fresh ``ce``/``re`` sets for the package, passed as ``packaged``.
    The lowest-price flag is the conjunction of both flags in every case.
    """
    if logic not in LOGICS:
        raise TrustError(f"unknown business logic {logic!r}")
    if aggregator not in AGGREGATORS:
        raise TrustError(f"unknown aggregator {aggregator!r}")
    if tr_a is None and tr_b is None and logic != "packaged":
        return None
    pg = (tr_a.pg if tr_a else False) and (tr_b.pg if tr_b else False)
    if logic == "packaged":
        if packaged is None:
            raise TrustError("packaged business logic needs externally collected ce/re sets")
        return ProviderTrust(tuple(packaged.ce), pg, tuple(packaged.re))
    tr_a = tr_a or ProviderTrust()
    tr_b = tr_b or ProviderTrust()
    rng = random.Random(seed)
    ce = _merge(tr_a.ce, tr_b.ce, logic, aggregator, rng)
    re_ = _merge(tr_a.re, tr_b.re, logic, aggregator, rng)
    return ProviderTrust(ce, pg, re_)
