import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from exchmarkov.chain import run_chain
from exchmarkov.classes import BINARY_SIG, get_class, sample_limit
from exchmarkov.errors import MalformedInputError
from exchmarkov.kernels import CutPasteSampler, identity_sampler
from exchmarkov.limits import (check_dissociation, density, density_exact, density_sampled, limit_vector,
                               max_jump, orbit_size, project_trajectory, random_injections,
                               reverse_martingale_check, rho_hat)
from exchmarkov.structures import FiniteStructure

from conftest import graph, structures, unary


def test_density_exact_edge_in_path(edge, path3):
    assert density_exact(edge, path3) == Fraction(2, 3)
    assert density_exact(graph(2, []), path3) == Fraction(1, 3)
    assert density_exact(graph(4, []), path3) == 0


def test_density_signature_mismatch(edge):
    with pytest.raises(MalformedInputError):
        density_exact(edge, unary(3, [1]))
    with pytest.raises(MalformedInputError):
        density_sampled(edge, unary(3, [1]))


def test_density_sampled_agrees_with_exact():
    rng = np.random.default_rng(0)
    K = get_class("digraphs")
    for k in range(25):
        M = K.random_member(int(rng.integers(4, 9)), rng)
        S = K.random_member(2, rng)
        exact = float(density_exact(S, M))
        est = density_sampled(S, M, samples=4000, seed=k)
        assert abs(est.value - exact) <= 3 * est.stderr + 1e-9


def test_er_edge_density():
    M = sample_limit("graphs", 400, 7)
    est = density(graph(2, [(1, 2)]), M, samples=20_000, seed=1)
    assert not est.exact
    assert abs(est.value - 0.5) < 0.03


@given(structures(min_n=2, max_n=6))
def test_densities_over_level_sum_to_one(M):
    level = [FiniteStructure(BINARY_SIG, 2, [frozenset(r)])
             for r in _subsets([(1, 1), (1, 2), (2, 1), (2, 2)])]
    assert sum(density_exact(S, M) for S in level) == 1


def _subsets(items):
    for mask in range(1 << len(items)):
        yield {x for i, x in enumerate(items) if mask >> i & 1}


def test_limit_vector_totals():
    M = sample_limit("graphs", 9, 3)
    vec = limit_vector(M, 3)
    assert vec.exact
    for m in (1, 2, 3):
        assert vec.total(m) == pytest.approx(1.0)
    assert vec.get(graph(2, [(1, 2)])) == pytest.approx(float(density_exact(graph(2, [(1, 2)]), M)))
    big = limit_vector(sample_limit("graphs", 60, 3), 2, samples=5000)
    assert not big.exact
    assert big.total(2) == pytest.approx(1.0)
    with pytest.raises(MalformedInputError):
        limit_vector(M, 6)


def test_orbit_sizes(edge, path3, triangle):
    assert orbit_size(edge) == 1
    assert orbit_size(path3) == 3
    assert orbit_size(triangle) == 1
    assert orbit_size(FiniteStructure(BINARY_SIG, 2, [{(1, 2)}])) == 2


@given(st.integers(1, 30), st.integers(0, 6), st.integers(0, 2**32))
def test_random_injections_are_injective(n, m, seed):
    if m > n:
        with pytest.raises(MalformedInputError):
            random_injections(n, m, 5, np.random.default_rng(seed))
        return
    phis = random_injections(n, m, 50, np.random.default_rng(seed))
    assert phis.shape == (50, m)
    for row in phis:
        assert len(set(row.tolist())) == m
        assert all(1 <= v <= n for v in row)


def test_rho_hat():
    A = [sample_limit("sets", 5, s) for s in range(200)]
    assert rho_hat(A, A).value == 0
    full = [unary(5, [1, 2, 3, 4, 5])] * 10
    empty = [unary(5, [])] * 10
    est = rho_hat(full, empty, n_cap=3)
    assert est.value == pytest.approx(2 * (0.5 + 0.25 + 0.125))
    assert est.tail_bound == 0.25
    with pytest.raises(MalformedInputError):
        rho_hat([], A)


def test_project_identity_trajectory_is_flat():
    M0 = sample_limit("sets", 50, 2)
    traj = run_chain(identity_sampler(get_class("sets")), M0, 3, 0)
    recs = project_trajectory(traj, [unary(1, [1]), unary(2, [])], samples=2000)
    assert len(recs) == 8
    assert max_jump(recs, 0)[0] == 0
    assert max_jump(recs, 1)[0] == 0


def test_project_detects_global_jump():
    traj = run_chain(CutPasteSampler(0.9, 0.9), unary(60, []), 2, 0)
    recs = project_trajectory(traj, [unary(1, [1])], samples=3000)
    jump, when = max_jump(recs)
    assert jump > 0.5 and when == 1.0


def test_reverse_martingale_check():
    M = sample_limit("graphs", 200, 4)
    out = reverse_martingale_check(M, graph(2, [(1, 2)]), [50, 100, 200], samples=10_000)
    assert [v["k"] for v in out["values"]] == [50, 100, 200]
    assert all(d < 0.1 for d in out["diffs"])
    with pytest.raises(MalformedInputError):
        reverse_martingale_check(M, graph(2, []), [100, 50])


def test_dissociation_passes_for_limit_sampler():
    v = check_dissociation(lambda s: sample_limit("graphs", 4, s), graph(2, [(1, 2)]), graph(2, []), samples=2000)
    assert v.passed
    assert 0 <= v.details["p_value"] <= 1


def test_dissociation_fails_for_shared_coin():
    def all_or_nothing(seed):
        on = np.random.default_rng(seed).random() < 0.5
        return unary(4, [1, 2, 3, 4] if on else [])

    v = check_dissociation(all_or_nothing, unary(1, [1]), unary(1, [1]), samples=500)
    assert v.failed
    assert v.witness["p_value"] < 0.01


def test_dissociation_degenerate_table():
    v = check_dissociation(lambda s: unary(2, []), unary(1, []), unary(1, []), samples=50)
    assert v.passed and v.details["degenerate"]
    assert math.isclose(v.details["p_value"], 1.0)
