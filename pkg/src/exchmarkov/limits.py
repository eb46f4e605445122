"""Induced-substructure densities, limit vectors and limit-path projections.

Densities are computed from injections [m] -> [n]: exactly by
enumeration for small n, otherwise by sampling uniform injections and
testing the induced structures in bulk with numpy.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import chi2_contingency

from ._seeding import rng_for
from .errors import MalformedInputError
from .structures import FiniteStructure, Injection, apply_injection, canonical_form, restrict
from .verdict import FAIL, PASS, Verdict

EXACT_MAX_N = 12
EXACT_MAX_M = 3


@dataclass(frozen=True)
class DensityEstimate:
    value: float
    stderr: float
    exact: bool
    samples: int = 0

    def to_json(self) -> dict:
        return {"value": self.value, "stderr": self.stderr, "exact": self.exact, "samples": self.samples}


def _positions(sig, m: int) -> list[tuple[int, tuple[int, ...]]]:
    return [(j, t) for j, ar in enumerate(sig.arities) for t in itertools.product(range(1, m + 1), repeat=ar)]


def _bits_of(S: FiniteStructure, positions) -> np.ndarray:
    return np.array([t in S.relations[j] for j, t in positions], dtype=bool)


def _encode(M: FiniteStructure) -> list[np.ndarray]:
    """Sorted integer codes of each relation's tuples (0-based, base n)."""
    out = []
    for ar, rel in zip(M.sig.arities, M.relations):
        weights = M.n ** np.arange(ar, dtype=np.int64)
        if rel:
            arr = np.array(sorted(rel), dtype=np.int64) - 1
            out.append(np.sort(arr @ weights))
        else:
            out.append(np.zeros(0, dtype=np.int64))
    return out


def induced_bits(M: FiniteStructure, phis: np.ndarray, m: int) -> np.ndarray:
    """(N, P) membership bits of the structures ``M^φ`` for rows φ of ``phis`` (1-based)."""
    codes = _encode(M)
    cols = []
    phis0 = np.asarray(phis, dtype=np.int64) - 1
    for j, t in _positions(M.sig, m):
        weights = M.n ** np.arange(len(t), dtype=np.int64)
        img = phis0[:, [c - 1 for c in t]] @ weights
        cols.append(np.isin(img, codes[j], assume_unique=False))
    if not cols:
        return np.zeros((len(phis0), 0), dtype=bool)
    return np.stack(cols, axis=1)


def _structure_from_bits(sig, m: int, bits: Sequence[bool]) -> FiniteStructure:
    rels: list[set] = [set() for _ in sig.arities]
    for (j, t), b in zip(_positions(sig, m), bits):
        if b:
            rels[j].add(t)
    return FiniteStructure(sig, m, [frozenset(r) for r in rels], validate=False)


def random_injections(n: int, m: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    """(samples, m) array of uniform injections [m] -> [n] (1-based)."""
    if m > n:
        raise MalformedInputError(f"no injections from [{m}] into [{n}]")
    if m == 0:
        return np.zeros((samples, 0), dtype=np.int64)
    if m * 4 > n:
        return np.argsort(rng.random((samples, n)), axis=1)[:, :m] + 1
    out = rng.integers(1, n + 1, size=(samples, m))
    while True:
        srt = np.sort(out, axis=1)
        bad = np.any(srt[:, 1:] == srt[:, :-1], axis=1)
        if not bad.any():
            return out
        out[bad] = rng.integers(1, n + 1, size=(int(bad.sum()), m))


def _all_injections(n: int, m: int) -> np.ndarray:
    perms = list(itertools.permutations(range(1, n + 1), m))
    return np.array(perms, dtype=np.int64).reshape(len(perms), m)


def density_exact(S: FiniteStructure, M: FiniteStructure) -> Fraction:
    """Fraction of the n↓m injections φ with ``M^φ = S``."""
    if S.sig != M.sig:
        raise MalformedInputError("density needs structures over the same signature")
    if S.n > M.n:
        return Fraction(0)
    phis = _all_injections(M.n, S.n)
    bits = induced_bits(M, phis, S.n)
    hits = int(np.all(bits == _bits_of(S, _positions(S.sig, S.n)), axis=1).sum())
    return Fraction(hits, len(phis))


def density_sampled(S: FiniteStructure, M: FiniteStructure, samples: int = 10_000, seed: int = 0,
                    *, phis: np.ndarray | None = None) -> DensityEstimate:
    """Monte Carlo density from uniform random injections."""
    if samples < 1:
        raise MalformedInputError("samples must be positive")
    if S.sig != M.sig:
        raise MalformedInputError("density needs structures over the same signature")
    if S.n > M.n:
        return DensityEstimate(0.0, 0.0, True, 0)
    if phis is None:
        phis = random_injections(M.n, S.n, samples, rng_for(seed, "density", S.n, M.n))
    bits = induced_bits(M, phis, S.n)
    hits = np.all(bits == _bits_of(S, _positions(S.sig, S.n)), axis=1)
    p = float(hits.mean())
    return DensityEstimate(p, math.sqrt(p * (1 - p) / len(phis)), False, len(phis))


def density(S: FiniteStructure, M: FiniteStructure, samples: int = 10_000, seed: int = 0,
            exact_max_n: int = EXACT_MAX_N) -> DensityEstimate:
    """Exact for small inputs, sampled otherwise."""
    if S.n > M.n:
        return DensityEstimate(0.0, 0.0, True, 0)
    if M.n <= exact_max_n and S.n <= EXACT_MAX_M:
        return DensityEstimate(float(density_exact(S, M)), 0.0, True, 0)
    return density_sampled(S, M, samples, seed)


# ---------------------------------------------------------------------------
# limit vectors

def orbit_size(S: FiniteStructure) -> int:
    """Number of distinct relabelings of S."""
    return len({apply_injection(S, Injection(p, S.n)) for p in itertools.permutations(range(1, S.n + 1))})


@dataclass
class DensityVector:
    """Densities per size of one representative per isomorphism type."""

    entries: dict[int, dict[FiniteStructure, float]] = field(default_factory=dict)
    orbits: dict[FiniteStructure, int] = field(default_factory=dict)
    exact: bool = True

    def get(self, S: FiniteStructure) -> float:
        rep = canonical_form(S)
        return self.entries.get(S.n, {}).get(rep, 0.0)

    def total(self, m: int) -> float:
        """``Σ_{S ∈ X_[m]} δ(S, M)``, which is 1 for every m."""
        return sum(v * self.orbits[S] for S, v in self.entries.get(m, {}).items())

    def to_json(self) -> list[dict]:
        return [{"size": m, "structure": S.to_dict(), "density": v, "orbit": self.orbits[S]}
                for m in sorted(self.entries) for S, v in sorted(self.entries[m].items())]


def limit_vector(M: FiniteStructure, size_cap: int = 3, samples: int = 10_000, seed: int = 0,
                 exact_max_n: int = EXACT_MAX_N) -> DensityVector:
    """Density of every isomorphism type up to ``size_cap`` in M."""
    if size_cap > 5:
        raise MalformedInputError("size_cap is limited to 5")
    vec = DensityVector()
    for m in range(1, min(size_cap, M.n) + 1):
        exact = M.n <= exact_max_n and m <= EXACT_MAX_M
        if exact:
            phis = _all_injections(M.n, m)
        else:
            phis = random_injections(M.n, m, samples, rng_for(seed, "limit-vector", m))
            vec.exact = False
        bits = induced_bits(M, phis, m)
        rows, counts = np.unique(bits, axis=0, return_counts=True)
        by_type: Counter = Counter()
        for row, c in zip(rows, counts):
            by_type[canonical_form(_structure_from_bits(M.sig, m, row))] += int(c)
        level = {}
        for rep, c in by_type.items():
            orb = vec.orbits.setdefault(rep, orbit_size(rep))
            level[rep] = c / len(phis) / orb
        vec.entries[m] = level
    return vec


# ---------------------------------------------------------------------------
# the ρ metric on empirical laws

@dataclass(frozen=True)
class RhoEstimate:
    value: float
    tail_bound: float
    n_cap: int

    def to_json(self) -> dict:
        return {"value": self.value, "tail_bound": self.tail_bound, "n_cap": self.n_cap}


def rho_hat(A: Sequence[FiniteStructure], B: Sequence[FiniteStructure], n_cap: int = 3) -> RhoEstimate:
    """Truncated ``Σ_k 2^{-k} Σ_S |γ_A(S) - γ_B(S)|`` over restrictions to [k], k <= n_cap."""
    if not A or not B:
        raise MalformedInputError("rho_hat needs two nonempty sample sets")
    total = 0.0
    for k in range(1, n_cap + 1):
        ca = Counter(restrict(M, k) for M in A if M.n >= k)
        cb = Counter(restrict(M, k) for M in B if M.n >= k)
        na, nb = sum(ca.values()), sum(cb.values())
        if not na or not nb:
            break
        total += 2.0 ** -k * sum(abs(ca.get(S, 0) / na - cb.get(S, 0) / nb) for S in set(ca) | set(cb))
    return RhoEstimate(total, 2.0 ** (-n_cap + 1), n_cap)


# ---------------------------------------------------------------------------
# trajectories and convergence diagnostics

def project_trajectory(traj, probes: Sequence[FiniteStructure], samples: int = 5_000, seed: int = 0,
                       exact_max_n: int = EXACT_MAX_N) -> list[dict]:
    """Density of each probe at every recorded time of a trajectory.

    The same injections are reused at every time point (common random
    numbers), so estimate changes reflect state changes only.
    """
    times = traj.times()
    states = traj.states
    n = traj.n
    records = []
    phis_by_size: dict[int, np.ndarray] = {}
    for pid, S in enumerate(probes):
        exact = n <= exact_max_n and S.n <= EXACT_MAX_M
        if not exact and S.n <= n and S.n not in phis_by_size:
            phis_by_size[S.n] = random_injections(n, S.n, samples, rng_for(seed, "project", S.n))
        for t, X in zip(times, states):
            if exact:
                est = DensityEstimate(float(density_exact(S, X)), 0.0, True)
            elif S.n > n:
                est = DensityEstimate(0.0, 0.0, True)
            else:
                est = density_sampled(S, X, phis=phis_by_size[S.n])
            records.append({"time": t, "probe_id": pid, "estimate": est.value, "stderr": est.stderr})
    return records


def max_jump(records: Iterable[dict], probe_id: int = 0) -> tuple[float, float | None]:
    """Largest absolute change between consecutive estimates of one probe, and its time."""
    series = [r for r in records if r["probe_id"] == probe_id]
    best, when = 0.0, None
    for prev, cur in zip(series, series[1:]):
        d = abs(cur["estimate"] - prev["estimate"])
        if d > best:
            best, when = d, cur["time"]
    return best, when


def reverse_martingale_check(M: FiniteStructure, S: FiniteStructure, checkpoints: Sequence[int],
                             samples: int = 10_000, seed: int = 0) -> dict:
    """``δ(S, M|[k])`` across checkpoints with successive absolute differences."""
    ks = list(checkpoints)
    if any(a >= b for a, b in zip(ks, ks[1:])) or (ks and ks[-1] > M.n):
        raise MalformedInputError("checkpoints must increase and not exceed n")
    values = [density(S, restrict(M, k), samples, seed).to_json() | {"k": k} for k in ks]
    diffs = [abs(b["value"] - a["value"]) for a, b in zip(values, values[1:])]
    return {"values": values, "diffs": diffs}


def check_dissociation(sampler: Callable[[int], FiniteStructure], S: FiniteStructure, T: FiniteStructure,
                       samples: int = 2_000, seed: int = 0, alpha: float = 0.01) -> Verdict:
    """Chi-square independence of ``[X|_{1..a} = S]`` and ``[X|_{a+1..a+b} = T]``."""
    a, b = S.n, T.n
    table = np.zeros((2, 2), dtype=np.int64)
    shift = None
    for r in range(samples):
        X = sampler(r + seed * samples)
        if X.n < a + b:
            raise MalformedInputError(f"generated structures need at least {a + b} elements")
        if shift is None:
            shift = Injection(tuple(range(a + 1, a + b + 1)), X.n)
        left = restrict(X, a) == S
        right = apply_injection(X, shift) == T
        table[int(left), int(right)] += 1
    details = {"table": table.tolist(), "samples": samples}
    if (table.sum(axis=0) == 0).any() or (table.sum(axis=1) == 0).any():
        return Verdict(PASS, details=details | {"degenerate": True, "p_value": 1.0})
    stat, p, _, _ = chi2_contingency(table, correction=False)
    details |= {"statistic": float(stat), "p_value": float(p)}
    if p > alpha:
        return Verdict(PASS, details=details)
    return Verdict(FAIL, {"statistic": float(stat), "p_value": float(p), "table": table.tolist()}, details)
