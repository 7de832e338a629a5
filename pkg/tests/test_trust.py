import pytest

from ctxsvc.model import ProviderTrust
from ctxsvc.trust import TrustError, aggregate, aggregate_trust, avg, glb, lub, partition

CE_A = (("alice", 4), ("bob", 2))
CE_B = (("alice", 3), ("carol", 5))


def test_glb_b_requires_a():
    out = aggregate_trust(ProviderTrust(CE_A), ProviderTrust(CE_B), "b_requires_a", "glb")
    assert dict(out.ce) == {"alice": 3, "carol": 5}


def test_glb_a_leads_to_b():
    out = aggregate_trust(ProviderTrust(CE_A), ProviderTrust(CE_B), "a_leads_to_b", "glb")
    assert dict(out.ce) == {"alice": 3, "bob": 2}


def test_lub_takes_the_higher_grade():
    out = aggregate_trust(ProviderTrust(CE_A), ProviderTrust(CE_B), "b_requires_a", "lub")
    assert dict(out.ce)["alice"] == 4


def test_lowest_price_flag_is_a_conjunction():
    out = aggregate_trust(ProviderTrust(CE_A, pg=True), ProviderTrust(CE_B, pg=False))
    assert out.pg is False
    out = aggregate_trust(ProviderTrust(CE_A, pg=True), ProviderTrust(CE_B, pg=True))
    assert out.pg is True


def test_packaged_uses_supplied_sets():
    pack = ProviderTrust((("dave", 1),), False, (("bbb", 5),))
    out = aggregate_trust(ProviderTrust(CE_A, pg=True), ProviderTrust(CE_B, pg=True), "packaged", packaged=pack)
    assert out.ce == pack.ce and out.re == pack.re and out.pg is True


def test_packaged_without_sets():
    with pytest.raises(TrustError):
        aggregate_trust(ProviderTrust(CE_A), ProviderTrust(CE_B), "packaged")


def test_unknown_aggregator():
    with pytest.raises(TrustError):
        aggregate_trust(ProviderTrust(CE_A), ProviderTrust(CE_B), aggregator="median")


def test_partition():
    only_a, only_b, shared = partition(dict(CE_A), dict(CE_B), "glb")
    assert only_a == {"bob": 2}
    assert only_b == {"carol": 5}
    assert shared == {"alice": 3}


def test_lattice_operations():
    assert glb([4, 2, 5]) == 2
    assert lub([4, 2, 5]) == 5
    # half rounds up
    assert avg([4, 5]) == 5
    assert avg([1, 2, 2]) == 2
    assert avg([1, 5]) == 3


def test_choose_is_reproducible():
    import random

    picks = [aggregate([1, 3, 5], "choose", random.Random(7)) for _ in range(3)]
    assert len(set(picks)) == 1 and picks[0] in (1, 3, 5)


def test_missing_trust_on_one_side():
    out = aggregate_trust(None, ProviderTrust(CE_B))
    assert dict(out.ce) == {"alice": 3, "carol": 5}
    assert aggregate_trust(None, None) is None
