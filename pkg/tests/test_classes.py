import itertools
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from exchmarkov.classes import (BINARY_SIG, FiniteClass, block_sets, canonical_embedding, check_dap, check_hp,
                                check_jep, check_ndap, enumerate_class, get_class, sample_limit)
from exchmarkov.errors import CapacityError, NotFoundError, UnsupportedClassError
from exchmarkov.structures import FiniteStructure, Injection, apply_injection, restrict

from conftest import graph, unary

FRAISSE = ["graphs", "digraphs", "tournaments", "sets", "colorings"]


@pytest.mark.parametrize("cid,n,count", [("partitions", 3, 5), ("graphs", 2, 2), ("linear-orders", 3, 6),
                                         ("partitions", 4, 15), ("tournaments", 3, 8), ("sets", 3, 8)])
def test_enumeration_counts(cid, n, count):
    members = enumerate_class(get_class(cid), n)
    assert len(members) == count == len(set(members))


def test_enumeration_bound():
    with pytest.raises(CapacityError):
        get_class("graphs").enumerate(6)


def test_unknown_class():
    with pytest.raises(UnsupportedClassError):
        get_class("no-such-class")


def test_hp_examples():
    assert check_hp(get_class("graphs"), 4).passed
    assert check_hp(get_class("partitions"), 4).passed
    size3 = [M for M in get_class("graphs").enumerate(3)]
    broken = FiniteClass.from_members(size3 + [graph(1, [])], id="broken")
    v = check_hp(broken, 3)
    assert v.failed and v.witness is not None


def test_jep_examples():
    assert check_jep(get_class("graphs"), 3, 6).passed
    assert check_jep(get_class("partitions"), 3, 6).passed
    assert check_jep(get_class("partitions2"), 2, 4).passed


def test_dap_examples():
    v = check_dap(get_class("singleton-or-empty"), 2)
    assert v.failed
    assert check_dap(get_class("graphs"), 3).passed
    assert check_dap(get_class("partitions"), 3).passed


def test_ndap_partition_witness():
    v = check_ndap(get_class("partitions"), 3)
    assert v.failed
    fam = [FiniteStructure.from_dict(s) for s in v.witness["family"]]
    assert v.witness["domains"] == [[2, 3], [1, 3], [1, 2]]
    # S_1 on {2,3}: separate; S_2 on {1,3}: joined; S_3 on {1,2}: joined
    assert [block_sets(S) for S in fam] == [[[1], [2]], [[1, 2]], [[1, 2]]]


def test_ndap_linear_orders_fail():
    assert check_ndap(get_class("linear-orders"), 3).failed


@pytest.mark.parametrize("cid", FRAISSE)
@pytest.mark.parametrize("n", [2, 3])
def test_ndap_fraisse_classes(cid, n):
    assert check_ndap(get_class(cid), n).passed


def test_ndap2_agrees_with_dap():
    for cid in ["graphs", "sets", "partitions", "singleton-or-empty"]:
        K = get_class(cid)
        assert check_ndap(K, 2).status == check_dap(K, 2).status


def test_canonical_embedding_examples():
    M = unary(10, [1, 2, 4, 8])
    assert canonical_embedding(unary(1, [1]), M).map == (1,)
    assert canonical_embedding(unary(1, []), M).map == (3,)
    assert canonical_embedding(unary(2, [2]), M).map == (3, 4)
    assert canonical_embedding(unary(0, []), M).map == ()
    with pytest.raises(NotFoundError):
        canonical_embedding(unary(3, [1, 2, 3]), unary(4, [1, 3]))


@given(st.integers(0, 2**32), st.integers(1, 6))
def test_canonical_embedding_prefix_coherent(seed, m):
    M = sample_limit("sets", 64, seed)
    S2 = sample_limit("sets", m, seed + 1)
    try:
        rho2 = canonical_embedding(S2, M)
    except NotFoundError:
        return
    assert all(a < b for a, b in zip(rho2.map, rho2.map[1:]))
    assert apply_injection(M, rho2) == S2
    for k in range(m + 1):
        assert canonical_embedding(restrict(S2, k), M).map == rho2.map[:k]


@pytest.mark.parametrize("cid", ["sets", "graphs", "digraphs", "tournaments", "partitions", "linear-orders",
                                 "colored-graphs", "colorings", "hypergraphs3", "kcolorings3"])
def test_limit_samplers_projective_and_members(cid):
    K = get_class(cid)
    for seed in range(5):
        big = sample_limit(K, 64, seed)
        for n in (0, 1, 5, 17):
            small = sample_limit(K, n, seed)
            assert restrict(big, n) == small
        assert K.contains(sample_limit(K, 5, seed))


def test_graph_edge_frequency():
    hits = sum((1, 2) in sample_limit("graphs", 2, s).relations[0] for s in range(10_000))
    assert abs(hits / 10_000 - 0.5) < 0.02


def test_linear_order_frequencies():
    counts = Counter(sample_limit("linear-orders", 3, s) for s in range(10_000))
    assert len(counts) == 6
    assert all(abs(c / 10_000 - 1 / 6) < 0.02 for c in counts.values())


@pytest.mark.parametrize("cid", ["sets", "graphs", "digraphs", "tournaments", "partitions", "linear-orders",
                                 "colorings"])
def test_limit_sampler_exchangeable(cid):
    seeds = 10_000
    base = Counter(sample_limit(cid, 3, s) for s in range(seeds))
    other = Counter(sample_limit(cid, 3, s) for s in range(seeds, 2 * seeds))
    for perm in itertools.permutations((1, 2, 3)):
        sigma = Injection(perm, 3)
        moved = Counter()
        for S, c in base.items():
            moved[apply_injection(S, sigma)] += c
        tv = 0.5 * sum(abs(moved[k] - other[k]) for k in set(moved) | set(other)) / seeds
        # 0.02 plus the sampling allowance between two independent empirical laws
        allowance = 1.5 * sum(((moved[k] + other[k]) / (2 * seeds) * 2 / seeds) ** 0.5 for k in set(moved) | set(other))
        assert tv <= 0.02 + allowance


def test_graph_universality_proxy():
    K = get_class("graphs")
    found = 0
    for seed in range(100):
        M = sample_limit(K, 64, seed)
        ok = True
        for S in K.enumerate(3):
            try:
                canonical_embedding(S, M)
            except NotFoundError:
                ok = False
                break
        found += ok
    assert found >= 99


def test_membership_closed_under_isomorphism():
    for cid in ["partitions", "linear-orders", "tournaments", "graphs"]:
        K = get_class(cid)
        for M in K.enumerate(3):
            for perm in itertools.permutations((1, 2, 3)):
                assert K.contains(apply_injection(M, Injection(perm, 3)))


def test_user_class_from_members():
    K = FiniteClass.from_members([graph(2, [(1, 2)])])
    assert len(K.enumerate(2)) == 1
    assert K.sig == BINARY_SIG
