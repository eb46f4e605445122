"""Acceptance suite: one test per criterion, each reporting a pass/fail line.

The lines are collected in ``RESULTS`` and echoed in the terminal summary
by ``conftest.pytest_terminal_summary``.
"""
import itertools
import time
from collections import Counter
from fractions import Fraction

import numpy as np

from exchmarkov.chain import check_exchangeability, tv_distance
from exchmarkov.classes import (canonical_embedding, check_dap, check_ndap, get_class, load_class,
                                sample_limit)
from exchmarkov.ctprocess import atom_measure, kingman_measure, lift_alpha_measure, replicate_ct, simulate_ct
from exchmarkov.errors import NotFoundError
from exchmarkov.kernels import (CutPasteKernel, CutPasteSampler, FunctionKernel, KingmanStepSampler,
                                PaintboxSampler, ResamplerKernel, SiteKernel, SiteSampler, coag, coag_kernel,
                                check_conjugation_invariance, check_consistency, compose, conjugate, frag_kernel,
                                kernel_from_target)
from exchmarkov.levyito import L_hat, Multiset, delta_F
from exchmarkov.limits import density_exact, density_sampled, max_jump, project_trajectory
from exchmarkov.structures import FiniteStructure, Injection, apply_injection, restrict, ultrametric

from conftest import graph, part, unary

RESULTS: list[str] = []


def report(num: int, title: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2}: {title} ({detail})")
    assert ok, detail


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def test_01_coagulation_exactness():
    pi = part(3, [1, 2], [3])
    cases = [(part(5, [1, 4], [2, 3, 5]), part(5, [1, 2, 3, 4, 5])),
             (part(5, [1, 4], [2], [3, 5]), part(5, [1, 2, 4], [3, 5]))]
    ok = all(coag(x, pi) == want for x, want in cases)
    reps = 200
    with Timer() as t:
        for _ in range(reps):
            for x, _want in cases:
                coag(x, pi)
    per_call = t.seconds / (reps * len(cases))
    report(1, "coagulation exactness", ok and per_call < 1e-3, f"{per_call * 1e3:.3f} ms per call")


def test_02_conjugation_invariance_counterexample():
    with Timer() as t:
        v = check_conjugation_invariance(coag_kernel(part(3, [1, 2], [3]), n_max=5), 5)
    ok = False
    if v.failed:
        for w in v.details["failing_subsets"]:
            if w["S"] == [3, 4, 5]:
                sub = Injection((3, 4, 5), 5)
                M, M2, FM, FM2 = (FiniteStructure.from_dict(w[k]) for k in ("M", "M2", "F_M", "F_M2"))
                ok = apply_injection(M, sub) == apply_injection(M2, sub) and \
                    apply_injection(FM, sub) != apply_injection(FM2, sub)
    report(2, "conjugation-invariance counterexample", ok and t.seconds < 1,
           f"witness on S=[3,4,5], {t.seconds:.3f} s")


def test_03_fraisse_matrix():
    with Timer() as t:
        cells = {(cid, n): check_ndap(load_class(cid, enum_bound=5), n).status
                 for cid in ("graphs", "digraphs", "tournaments", "sets", "colorings") for n in (2, 3, 4)}
        parts = check_ndap(get_class("partitions"), 3)
        orders = check_ndap(get_class("linear-orders"), 3)
        singleton = check_dap(get_class("singleton-or-empty"), 2)
    ok = all(s == "pass" for s in cells.values())
    # partitions: {2,3} separate while {1,3} and {1,2} joined, violating transitivity
    blocks = [FiniteStructure.from_dict(S).relations[0] for S in parts.witness["family"]] if parts.failed else []
    ok &= parts.failed and [(1, 2) in R for R in blocks] == [False, True, True]
    # linear orders: the three pairwise orders form a cycle
    if orders.failed:
        fam = [FiniteStructure.from_dict(S) for S in orders.witness["family"]]
        edges = set()
        for S, dom in zip(fam, orders.witness["domains"]):
            for a, b in S.relations[0]:
                if a != b:
                    edges.add((dom[a - 1], dom[b - 1]))
        ok &= len(edges) == 3 and any({(a, b), (b, c), (c, a)} <= edges for a, b, c in itertools.permutations((1, 2, 3)))
    else:
        ok = False
    ok &= singleton.failed
    report(3, "Fraisse-class matrix", ok and t.seconds < 60, f"{len(cells)} n-DAP cells pass, {t.seconds:.1f} s")


def test_04_levy_ito_classification():
    kernels = {v: ResamplerKernel(1, v, seed=0) for v in ("ex1", "ex2", "ex3")}
    with Timer() as t:
        cores = {v: delta_F(F, 60, 0.1).core for v, F in kernels.items()}
        lhat = L_hat(kernels["ex1"], 1, 0, Multiset.of([1]), 60)
    ok = cores == {"ex1": Multiset.of([1]), "ex2": Multiset.of([1, 1]), "ex3": Multiset.of([1])}
    ok &= abs(lhat - Fraction(1, 3)) <= Fraction(1, 20)
    report(4, "Levy-Ito classification", ok and t.seconds < 300,
           f"cores {[str(c) for c in cores.values()]}, L_hat={float(lhat):.4f}, {t.seconds:.1f} s")


def test_05_kingman_timing():
    with Timer() as t:
        firsts = [tr.jump_times[0] for tr in replicate_ct(kingman_measure(1.0), part(10, *[[i] for i in range(1, 11)]),
                                                          1e9, 10_000, seed=11)]
        absorb = [tr.jump_times[-1] for tr in replicate_ct(kingman_measure(1.0), part(6, *[[i] for i in range(1, 7)]),
                                                           1e9, 10_000, seed=12)]
    want_first = 1 / 45
    want_absorb = sum(1 / (k * (k - 1) / 2) for k in range(2, 7))
    r1, r2 = np.mean(firsts) / want_first, np.mean(absorb) / want_absorb
    ok = abs(r1 - 1) < 0.05 and abs(r2 - 1) < 0.05
    report(5, "Kingman timing", ok and t.seconds < 120,
           f"first-jump ratio {r1:.4f}, absorption ratio {r2:.4f}, {t.seconds:.1f} s")


def test_06_projectivity_in_law():
    lam = kingman_measure(1.0)
    reps = 100_000
    times = (0.5, 1.0)
    with Timer() as t:
        big = replicate_ct(lam, part(5, *[[i] for i in range(1, 6)]), 1.0, reps, seed=21)
        small = replicate_ct(lam, part(4, *[[i] for i in range(1, 5)]), 1.0, reps, seed=22)
        tvs = []
        for s in times:
            a = Counter(restrict(tr.state_at(s), 4) for tr in big)
            b = Counter(tr.state_at(s) for tr in small)
            tvs.append(tv_distance(a, b))
    ok = all(tv <= 0.03 for tv in tvs)
    report(6, "projectivity in law", ok and t.seconds < 300,
           f"TV at t=0.5,1.0: {tvs[0]:.4f}, {tvs[1]:.4f}, {t.seconds:.1f} s")


def test_07_exchangeability_suite():
    with Timer() as t:
        cut = check_exchangeability(CutPasteSampler(0.3, 0.6), 3, replicas=10_000, tol=0.03)
        king = check_exchangeability(KingmanStepSampler(3), 3, replicas=10_000, tol=0.03)
        bad = check_exchangeability(SiteSampler(1), 3, replicas=10_000, tol=0.03)
    ok = cut.passed and king.passed and bad.failed
    report(7, "exchangeability suite", ok and t.seconds < 180,
           f"cutpaste {cut.status}, kingman-step {king.status}, single-site {bad.status}, {t.seconds:.1f} s")


def _builtin_kernels():
    pi6 = part(6, [1, 3], [2], [4, 5, 6])
    return {
        "coag": coag_kernel(pi6),
        "frag": frag_kernel(part(6, [1, 2], [3, 4, 5, 6]), 1),
        "cutpaste": CutPasteKernel(0.3, 0.7, 11),
        "site-flip": SiteKernel(2),
        "site-resample": SiteKernel(3, "resample", 0.4, 5),
        "resampler-ex1": ResamplerKernel(1, "ex1", 3),
        "resampler-ex2": ResamplerKernel(2, "ex2", 3),
        "resampler-ex3": ResamplerKernel(1, "ex3", 3),
        "paintbox-coag": PaintboxSampler([0.5, 0.3]).sample(4),
        "paintbox-frag": PaintboxSampler([0.4, 0.2], "frag", 1).sample(4),
        "kingman-step": KingmanStepSampler(6).sample(9),
        "conjugate": conjugate(CutPasteKernel(0.2, 0.8, 1), Injection((3, 1, 2), 3)),
        "compose": compose(SiteKernel(1), CutPasteKernel(0.5, 0.5, 2)),
        "from-target": kernel_from_target(unary(12, [1, 3, 4, 7, 8, 11]), unary(12, [2, 3, 5, 8, 9]),
                                          get_class("sets")),
    }


def test_08_kernel_coherence():
    sampled = []
    with Timer() as t:
        ok = True
        for name, F in _builtin_kernels().items():
            for n in range(1, min(5, F.n_max)):
                v = check_consistency(F, n, samples=2000)
                ok &= v.passed
                if v.details["regime"] != "exhaustive":
                    sampled.append(name)
        sets = get_class("sets")
        corrupt = FunctionKernel(sets, lambda M: M.replace(0, set(M.relations[0]) | {(M.n,)}) if M.n else M)
        bad = check_consistency(corrupt, 3)
        ok &= bad.failed and bad.witness is not None
    note = f"sampled for {sorted(set(sampled))}" if sampled else "all exhaustive"
    report(8, "kernel coherence", ok and t.seconds < 60, f"{note}; corrupted fixture fails, {t.seconds:.1f} s")


def test_09_density_machinery():
    rng = np.random.default_rng(9)
    with Timer() as t:
        ok = density_exact(graph(2, [(1, 2)]), graph(3, [(1, 2), (2, 3)])) == Fraction(2, 3)
        K = get_class("graphs")
        misses = 0
        for k in range(100):
            M = K.random_member(int(rng.integers(5, 11)), rng)
            S = K.random_member(int(rng.integers(2, 4)), rng)
            est = density_sampled(S, M, samples=10_000, seed=k)
            misses += abs(est.value - float(density_exact(S, M))) > 3 * est.stderr + 1e-12
        ok &= misses == 0
        er = density_sampled(graph(2, [(1, 2)]), sample_limit("graphs", 400, 5), samples=20_000, seed=1).value
        ok &= abs(er - 0.5) <= 0.03
        level = K.enumerate(2)
        sums_ok = True
        for _ in range(50):
            M = K.random_member(int(rng.integers(2, 9)), rng)
            sums_ok &= sum(density_exact(S, M) for S in level) == 1
        ok &= sums_ok
    report(9, "density machinery", ok and t.seconds < 120,
           f"{misses} misses beyond 3 stderr, ER density {er:.4f}, {t.seconds:.1f} s")


def test_10_limit_path_behavior():
    n = 300
    probe = unary(1, [1])
    with Timer() as t:
        local = lift_alpha_measure([(0.1, SiteSampler(1))], (1,), n)
        traj = simulate_ct(local, unary(n, []), 3.0, seed=5)
        small, _ = max_jump(project_trajectory(traj, [probe], samples=5000, seed=1))
        mixed = local + atom_measure([(1.0, CutPasteSampler(0.9, 0.9))])
        traj2 = simulate_ct(mixed, unary(n, []), 3.0, seed=5)
        big, when = max_jump(project_trajectory(traj2, [probe], samples=5000, seed=1))
        # the largest jump happens at a global event, which changes many coordinates at once
        idx = traj2.jump_times.index(when) if when in traj2.jump_times else None
        before = traj2.states[idx] if idx is not None else None
        after = traj2.states[idx + 1] if idx is not None else None
        changed = len(before.relations[0] ^ after.relations[0]) if idx is not None else 0
    ok = small <= 0.05 and big >= 0.2 and changed > 1
    report(10, "limit-path behavior", ok and t.seconds < 180,
           f"local max jump {small:.4f}, with cutpaste {big:.4f} at t={when:.3f} ({changed} sites), "
           f"{t.seconds:.1f} s")


def test_11_ultrametric_axioms():
    rng = np.random.default_rng(11)
    K = get_class("digraphs")
    violations = 0

    def perturb(M):
        # resample every tuple above a random depth, so triples share prefixes
        depth = int(rng.integers(0, 7))
        R = K.random_member(6, rng)
        keep = {t for t in M.relations[0] if max(t) <= depth}
        fresh = {t for t in R.relations[0] if max(t) > depth}
        return FiniteStructure(M.sig, 6, [keep | fresh])

    with Timer() as t:
        for _ in range(10_000):
            a = K.random_member(6, rng)
            b, c = perturb(a), perturb(a)
            if ultrametric(a, b) != ultrametric(b, a):
                violations += 1
            if ultrametric(a, c) > max(ultrametric(a, b), ultrametric(b, c)):
                violations += 1
    report(11, "ultrametric axioms", violations == 0 and t.seconds < 10,
           f"{violations} violations over 10^4 triples, {t.seconds:.1f} s")


def test_12_canonical_embedding():
    M = unary(10, [1, 2, 4, 8])
    with Timer() as t:
        ok = canonical_embedding(unary(1, [1]), M).map == (1,)
        ok &= canonical_embedding(unary(1, []), M).map == (3,)
        ok &= canonical_embedding(unary(2, [2]), M).map == (3, 4)
        checked = 0
        for seed in range(3000):
            if checked == 1000:
                break
            big = sample_limit("sets", 64, seed)
            m = 2 + seed % 5
            S2 = sample_limit("sets", m, seed + 100_000)
            k = seed % m
            try:
                rho2 = canonical_embedding(S2, big)
            except NotFoundError:
                continue
            ok &= canonical_embedding(restrict(S2, k), big).map == rho2.map[:k]
            checked += 1
    report(12, "canonical embedding", ok and checked == 1000 and t.seconds < 30,
           f"{checked} nested pairs prefix-coherent, {t.seconds:.1f} s")
