import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from exchmarkov.classes import block_sets, get_class
from exchmarkov.ctprocess import (CTTrajectory, RankedSimplexPoint, RateMeasure, RatedAtom, atom_measure,
                                  erosion_measure, jump_rates, kingman_measure, lift_alpha_measure,
                                  paintbox_measure, replicate_ct, simulate_ct)
from exchmarkov.errors import DomainError, MalformedInputError, ValidationError
from exchmarkov.kernels import (CutPasteKernel, CutPasteSampler, FunctionKernel, FunctionSampler, PointMass,
                                ResamplerSampler, SiteSampler, identity_sampler)
from exchmarkov.structures import FiniteStructure, Injection, apply_injection

from conftest import graph, part, unary

SINGLETONS4 = part(4, [1], [2], [3], [4])


def test_simplex_point_validation():
    assert RankedSimplexPoint((0.5, 0.25)).dust == pytest.approx(0.25)
    for bad in [(), (0.2, 0.5), (0.8, 0.4), (-0.1,)]:
        with pytest.raises(ValidationError):
            RankedSimplexPoint(bad)


def test_rate_measure_validation():
    with pytest.raises(ValidationError):
        atom_measure([(1.0, identity_sampler(get_class("sets")))])
    with pytest.raises(ValidationError):
        atom_measure([(0.0, CutPasteSampler(0.5, 0.5))])
    with pytest.raises(ValidationError):
        kingman_measure(-1)
    with pytest.raises(DomainError):
        atom_measure([(1.0, CutPasteSampler(0.5, 0.5))]) + kingman_measure(1.0)
    with pytest.raises(ValidationError):
        paintbox_measure([(1.0, [1.0])], "frag")
    with pytest.raises(ValidationError):
        paintbox_measure([(1.0, [0.0])], "coag")


def test_components_labels():
    lam = kingman_measure(1.0) + paintbox_measure([(0.5, [0.5])], "frag") + erosion_measure(0.2)
    assert [c[0] for c in lam.components()] == ["kingman", "paintbox[0][0]:frag", "erosion"]


def test_trajectory_validation_and_lookup():
    a, b = unary(2, []), unary(2, [1])
    traj = CTTrajectory(2, a, [(0.5, b), (1.5, a)])
    assert traj.state_at(0.0) == a
    assert traj.state_at(0.5) == b
    assert traj.state_at(1.0) == b
    assert traj.state_at(2.0) == a
    assert traj.times() == [0.0, 0.5, 1.5]
    assert traj.to_records()[0] == {"t": 0.0, "state": a.to_dict()}
    with pytest.raises(MalformedInputError):
        CTTrajectory(2, a, [(0.5, b), (0.5, a)])
    with pytest.raises(MalformedInputError):
        CTTrajectory(2, a, [(0.5, a)])


def test_simulate_ct_deterministic_and_validated():
    lam = kingman_measure(1.0)
    a = simulate_ct(lam, SINGLETONS4, 2.0, seed=5)
    b = simulate_ct(lam, SINGLETONS4, 2.0, seed=5)
    assert a.jumps == b.jumps
    with pytest.raises(MalformedInputError):
        simulate_ct(lam, SINGLETONS4, 0.0, seed=5)
    with pytest.raises(DomainError):
        simulate_ct(lam, unary(2, []), 1.0, seed=5)


def test_kingman_hold_time_is_exponential():
    firsts = [t.jump_times[0] for t in replicate_ct(kingman_measure(1.0), SINGLETONS4, 50.0, 2000, seed=1)]
    # 4 singleton blocks merge at total rate C(4,2) = 6
    assert stats.kstest(firsts, "expon", args=(0, 1 / 6)).pvalue > 1e-3


def test_kingman_path_merges_two_blocks_per_jump():
    traj = simulate_ct(kingman_measure(2.0), part(5, [1], [2], [3], [4], [5]), 100.0, seed=2)
    sizes = [len(block_sets(S)) for S in traj.states]
    assert sizes == [5, 4, 3, 2, 1]


def test_erosion_isolates_elements():
    traj = simulate_ct(erosion_measure(1.0), part(3, [1, 2, 3]), 100.0, seed=0)
    assert block_sets(traj.states[-1]) == [[1], [2], [3]]
    assert len(traj.jumps) == 2


def test_null_events_are_thinned():
    lam = atom_measure([(1.0, CutPasteSampler(0.5, 0.5))])
    trajs = replicate_ct(lam, unary(1, []), 1.0, 4000, seed=3)
    still = sum(not t.jumps for t in trajs) / 4000
    # only half of the proposals change a single coordinate
    assert abs(still - math.exp(-0.5)) < 0.03


def test_complement_atom_alternates():
    lam = atom_measure([(2.0, PointMass(CutPasteKernel(1.0, 0.0, 0)))])
    M0 = unary(3, [2])
    traj = simulate_ct(lam, M0, 5.0, seed=4)
    assert traj.jumps
    for k, S in enumerate(traj.states):
        assert S == (M0 if k % 2 == 0 else unary(3, [1, 3]))


def test_jump_rates_kingman_exact():
    row = jump_rates(kingman_measure(1.0), part(3, [1], [2], [3]))
    assert row.exact
    assert row.total == pytest.approx(3.0)
    assert sorted(block_sets(T) for T in row.rates) == [[[1], [2, 3]], [[1, 2], [3]], [[1, 3], [2]]]


def test_jump_rates_paintbox_and_erosion():
    row = jump_rates(paintbox_measure([(1.0, [0.5])], "frag"), part(3, [1, 2, 3]))
    assert row.exact
    assert row.total == pytest.approx(1 - 0.5 ** 3)
    assert jump_rates(erosion_measure(2.0), part(3, [1, 2, 3])).total == pytest.approx(6.0)
    coag = jump_rates(paintbox_measure([(1.0, [0.5])], "coag"), part(3, [1], [2], [3]))
    # three blocks: a change needs at least two blocks in the box
    assert coag.total == pytest.approx(3 * 0.125 + 0.125)


def test_jump_rates_sampled_atoms_have_stderr():
    row = jump_rates(atom_measure([(1.0, CutPasteSampler(0.3, 0.6))]), unary(2, [1]), samples=4000)
    assert not row.exact
    assert set(row.stderr) == set(row.rates)
    assert row.to_json()["total"] == pytest.approx(row.total)


def _relabel_row(row, sigma):
    return {apply_injection(T, sigma): r for T, r in row.rates.items()}


@given(st.permutations([1, 2, 3, 4]), st.sampled_from(get_class("partitions").enumerate(4)))
def test_rate_rows_are_exchangeable(perm, S):
    lam = kingman_measure(1.0) + paintbox_measure([(0.5, [0.4, 0.3])], "coag") + erosion_measure(0.2)
    sigma = Injection(tuple(perm), 4)
    direct = jump_rates(lam, apply_injection(S, sigma)).rates
    moved = _relabel_row(jump_rates(lam, S), sigma)
    assert set(direct) == set(moved)
    for T in direct:
        assert direct[T] == pytest.approx(moved[T])


def _edge12_sampler():
    graphs = get_class("graphs")

    def flip(M):
        rel = set(M.relations[0]) ^ {(1, 2), (2, 1)} if M.n >= 2 else M.relations[0]
        return FiniteStructure(M.sig, M.n, [rel])

    F = FunctionKernel(graphs, flip, tag="edge12", changes_fn=lambda j, n: frozenset({(1, 2), (2, 1)}) if n >= 2
                       else frozenset())
    return FunctionSampler(graphs, lambda seed: F, tag="edge12", deterministic=True)


@pytest.mark.parametrize("alpha,sampler", [
    ((1,), SiteSampler(1)),
    ((2,), ResamplerSampler("ex2")),
    ((1, 1), _edge12_sampler()),
], ids=["(1)", "(2)", "(1,1)"])
def test_lift_counts_at_n3(alpha, sampler):
    lam = lift_alpha_measure([(0.5, sampler)], alpha, 3)
    assert len(lam.atoms) == 3
    assert all(a.rate == 0.5 for a in lam.atoms)


def test_lifted_edge_atoms_cover_every_pair():
    lam = lift_alpha_measure([(1.0, _edge12_sampler())], (1, 1), 3)
    empty = graph(3, [])
    hit = set()
    for a in lam.atoms:
        out = a.sampler.sample(0)(empty)
        hit |= {tuple(sorted(e)) for e in out.relations[0]}
    assert hit == {(1, 2), (1, 3), (2, 3)}


def test_lift_rejects_unanchored_sampler():
    with pytest.raises(ValidationError):
        lift_alpha_measure([(1.0, SiteSampler(2))], (1,), 3)
    with pytest.raises(ValidationError):
        lift_alpha_measure([(1.0, CutPasteSampler(0.5, 0.5))], (1,), 3)


def test_lifted_site_rates_are_uniform():
    lam = lift_alpha_measure([(0.25, SiteSampler(1))], (1,), 4)
    row = jump_rates(lam, unary(4, []))
    assert row.exact
    assert sorted(row.rates.values()) == [0.25] * 4
    assert {tuple(sorted(T.relations[0])) for T in row.rates} == {((k,),) for k in range(1, 5)}


def test_rated_atom_sum():
    lam = atom_measure([(1.0, SiteSampler(1))]) + atom_measure([(2.0, SiteSampler(2))])
    assert [a.rate for a in lam.atoms] == [1.0, 2.0]
    assert isinstance(lam.atoms[0], RatedAtom)
    assert isinstance(lam, RateMeasure)


def test_replicas_independent():
    trajs = replicate_ct(kingman_measure(1.0), SINGLETONS4, 1.0, 20, seed=0)
    firsts = {t.jump_times[0] for t in trajs if t.jumps}
    assert len(firsts) > 15
    assert np.all(np.diff(trajs[0].jump_times) > 0)
    assert all(len(t.jump_times) <= 3 for t in trajs)
