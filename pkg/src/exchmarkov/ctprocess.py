"""Continuous-time Λ-processes driven by competing exponential clocks.

A :class:`RateMeasure` is a finite list of rated kernel samplers plus
the classical partition families (Kingman, paintbox, erosion).
Generic atoms are proposed at their full rate and events whose kernel
leaves the current state unchanged are discarded (null-event thinning).
The partition families are simulated at their exact non-null rates on
the current block structure.
"""
from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Iterable, Sequence

import numpy as np

from ._parallel import ordered_map
from ._seeding import derive_seed, rng_for
from .classes import FiniteClass, blocks, get_class, partition_from_blocks
from .errors import DomainError, MalformedInputError, ValidationError
from .kernels import (ConjugatedSampler, FragKernel, KernelSampler, _PaintboxLabels, apply,
                      validate_simplex_point)
from .structures import FiniteStructure

_PARTITIONS = "partitions"


@dataclass(frozen=True)
class RankedSimplexPoint:
    """A point of the ranked simplex: nonincreasing, in [0,1], summing to at most 1."""

    s: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(float(v) for v in self.s))
        if not self.s:
            raise ValidationError("simplex point must have at least one coordinate")
        if any(v < 0 or v > 1 for v in self.s):
            raise ValidationError(f"simplex point {list(self.s)} has coordinates outside [0,1]")
        if any(a < b for a, b in zip(self.s, self.s[1:])):
            raise ValidationError(f"simplex point {list(self.s)} is not nonincreasing")
        if sum(self.s) > 1 + 1e-12:
            raise ValidationError(f"simplex point {list(self.s)} sums to more than 1")

    @property
    def dust(self) -> float:
        return max(0.0, 1.0 - sum(self.s))

    def check_mode(self, mode: str) -> None:
        validate_simplex_point(self.s, mode)


@dataclass(frozen=True)
class RatedAtom:
    rate: float
    sampler: KernelSampler


@dataclass(frozen=True)
class PaintboxFamily:
    """Finitely many paintbox atoms ``(w, s)`` acting by coagulation or fragmentation."""

    mode: str
    atoms: tuple[tuple[float, RankedSimplexPoint], ...]

    def __post_init__(self):
        if self.mode not in ("coag", "frag"):
            raise ValidationError(f"paintbox mode must be coag or frag, got {self.mode!r}")
        fixed = []
        for w, s in self.atoms:
            if not w > 0:
                raise ValidationError(f"paintbox mass must be positive, got {w}")
            s = s if isinstance(s, RankedSimplexPoint) else RankedSimplexPoint(tuple(s))
            s.check_mode(self.mode)
            fixed.append((float(w), s))
        object.__setattr__(self, "atoms", tuple(fixed))


@dataclass(frozen=True)
class RateMeasure:
    """Finite characteristic measure: rated atoms plus partition families."""

    atoms: tuple[RatedAtom, ...] = ()
    kingman: float = 0.0
    paintbox: tuple[PaintboxFamily, ...] = ()
    erosion: float = 0.0
    cls: FiniteClass | None = None

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "paintbox", tuple(self.paintbox))
        if self.kingman < 0 or self.erosion < 0:
            raise ValidationError("kingman and erosion constants must be nonnegative")
        classes = []
        for a in self.atoms:
            if not a.rate > 0:
                raise ValidationError(f"atom rate must be positive, got {a.rate}")
            if a.sampler.tag == "identity":
                raise ValidationError("the identity kernel carries no rate")
            classes.append(a.sampler.cls)
        if self.has_partition_families:
            classes.append(get_class(_PARTITIONS))
        if self.cls is not None:
            classes.append(self.cls)
        if classes and any(c != classes[0] for c in classes):
            raise DomainError("all components of a rate measure must act on the same class")
        object.__setattr__(self, "cls", classes[0] if classes else None)

    @property
    def has_partition_families(self) -> bool:
        return self.kingman > 0 or self.erosion > 0 or bool(self.paintbox)

    def __add__(self, other: "RateMeasure") -> "RateMeasure":
        return RateMeasure(self.atoms + other.atoms, self.kingman + other.kingman,
                           self.paintbox + other.paintbox, self.erosion + other.erosion,
                           self.cls or other.cls)

    def components(self) -> list[tuple[str, float, KernelSampler | None]]:
        """Labelled pieces (label, rate, sampler); families have no single sampler."""
        out = [(f"atom[{i}]:{a.sampler.tag}", a.rate, a.sampler) for i, a in enumerate(self.atoms)]
        if self.kingman > 0:
            out.append(("kingman", self.kingman, None))
        for f, fam in enumerate(self.paintbox):
            for i, (w, s) in enumerate(fam.atoms):
                out.append((f"paintbox[{f}][{i}]:{fam.mode}", w, None))
        if self.erosion > 0:
            out.append(("erosion", self.erosion, None))
        return out


def kingman_measure(c: float = 1.0) -> RateMeasure:
    if c < 0:
        raise ValidationError("kingman constant must be nonnegative")
    return RateMeasure(kingman=float(c), cls=get_class(_PARTITIONS))


def paintbox_measure(nu: Iterable[tuple[float, Sequence[float]]], mode: str = "coag") -> RateMeasure:
    fam = PaintboxFamily(mode, tuple((w, s) for w, s in nu))
    return RateMeasure(paintbox=(fam,), cls=get_class(_PARTITIONS))


def erosion_measure(c: float) -> RateMeasure:
    if c < 0:
        raise ValidationError("erosion constant must be nonnegative")
    return RateMeasure(erosion=float(c), cls=get_class(_PARTITIONS))


def atom_measure(atoms: Iterable[tuple[float, KernelSampler]]) -> RateMeasure:
    return RateMeasure(tuple(RatedAtom(float(r), s) for r, s in atoms))


# ---------------------------------------------------------------------------
# trajectories

@dataclass
class CTTrajectory:
    """Càdlàg path on [n]: initial state and (time, new state) jumps."""

    n: int
    initial: FiniteStructure
    jumps: list[tuple[float, FiniteStructure]] = field(default_factory=list)
    t_max: float = math.inf

    def __post_init__(self):
        prev_t, prev = 0.0, self.initial
        for t, S in self.jumps:
            if not t > prev_t:
                raise MalformedInputError("jump times must be strictly increasing and positive")
            if S == prev:
                raise MalformedInputError(f"jump at t={t} does not change the state")
            prev_t, prev = t, S

    @property
    def jump_times(self) -> list[float]:
        return [t for t, _ in self.jumps]

    def state_at(self, t: float) -> FiniteStructure:
        idx = bisect.bisect_right(self.jump_times, t)
        return self.initial if idx == 0 else self.jumps[idx - 1][1]

    def times(self) -> list[float]:
        return [0.0] + self.jump_times

    @property
    def states(self) -> list[FiniteStructure]:
        return [self.initial] + [S for _, S in self.jumps]

    def to_records(self) -> list[dict]:
        return [{"t": 0.0, "state": self.initial.to_dict()}] + [{"t": t, "state": S.to_dict()}
                                                                for t, S in self.jumps]


# ---------------------------------------------------------------------------
# simulation

def _merge_pair(blks: list, i: int, j: int, n: int, sig) -> FiniteStructure:
    merged = [b for idx, b in enumerate(blks) if idx not in (i, j)] + [blks[i] | blks[j]]
    return partition_from_blocks(merged, n, sig)


def _paintbox_coag(blks: list, s: RankedSimplexPoint, rng: np.random.Generator, n: int, sig) -> FiniteStructure:
    edges = np.cumsum(s.s)
    box = np.searchsorted(edges, rng.random(len(blks)), side="right")
    merged: dict[int, set] = {}
    for idx, (b, lab) in enumerate(zip(blks, box)):
        key = int(lab) if lab < len(s.s) else -(idx + 1)
        merged.setdefault(key, set()).update(b)
    return partition_from_blocks(merged.values(), n, sig)


def _isolate(blks: list, element: int, n: int, sig) -> FiniteStructure:
    out = []
    for b in blks:
        if element in b:
            out.extend([b - {element}, frozenset({element})])
        else:
            out.append(b)
    return partition_from_blocks(out, n, sig)


def _seed_from(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 1 << 63))


def simulate_ct(lam: RateMeasure, M0: FiniteStructure, t_max: float, seed: int) -> CTTrajectory:
    """Gillespie simulation of the Λ-process on [n] up to ``t_max``."""
    if not t_max > 0:
        raise MalformedInputError("t_max must be positive")
    if lam.cls is not None and not lam.cls.contains(M0):
        raise DomainError("initial state is not a member of the measure's class")
    n, sig = M0.n, M0.sig
    rng = rng_for(seed, "ct")
    atom_rates = [a.rate for a in lam.atoms]
    atom_total = sum(atom_rates)
    t, X = 0.0, M0
    jumps: list[tuple[float, FiniteStructure]] = []
    partition_mode = lam.has_partition_families
    while True:
        channels: list[tuple[float, str, object]] = []
        if atom_total > 0:
            channels.append((atom_total, "atom", None))
        if partition_mode:
            blks = blocks(X)
            k = len(blks)
            if lam.kingman > 0 and k >= 2:
                channels.append((lam.kingman * k * (k - 1) / 2, "kingman", None))
            for fam in lam.paintbox:
                for w, s in fam.atoms:
                    rate = w if fam.mode == "coag" else w * k
                    if fam.mode == "coag" and k < 2:
                        continue
                    channels.append((rate, fam.mode, s))
            if lam.erosion > 0:
                loose = [i for b in blks if len(b) > 1 for i in sorted(b)]
                if loose:
                    channels.append((lam.erosion * len(loose), "erosion", loose))
        total = sum(c[0] for c in channels)
        if total <= 0:
            break
        t += rng.exponential(1.0 / total)
        if t > t_max:
            break
        u = rng.random() * total
        for rate, kind, payload in channels:
            if u < rate:
                break
            u -= rate
        if kind == "atom":
            idx = int(np.searchsorted(np.cumsum(atom_rates), rng.random() * atom_total, side="right"))
            idx = min(idx, len(atom_rates) - 1)
            F = lam.atoms[idx].sampler.sample(_seed_from(rng))
            new = apply(F, X, check=False)
        elif kind == "kingman":
            i, j = sorted(rng.choice(len(blks), size=2, replace=False))
            new = _merge_pair(blks, int(i), int(j), n, sig)
        elif kind == "coag":
            new = _paintbox_coag(blks, payload, rng, n, sig)
        elif kind == "frag":
            K = int(rng.integers(1, len(blks) + 1))
            F = FragKernel(None, K, labels_fn=_PaintboxLabels(payload.s, _seed_from(rng)))
            new = F._apply(X)
        else:
            new = _isolate(blks, payload[int(rng.integers(len(payload)))], n, sig)
        if new != X:
            X = new
            jumps.append((t, X))
    return CTTrajectory(n, M0, jumps, t_max)


def _simulate_one(lam, M0, t_max, seed, r):
    return simulate_ct(lam, M0, t_max, derive_seed(seed, "replica", r))


def replicate_ct(lam: RateMeasure, M0: FiniteStructure, t_max: float, replicas: int,
                 seed: int) -> list[CTTrajectory]:
    """Independent replicas with seeds derived from ``seed`` and the replica index."""
    return ordered_map(partial(_simulate_one, lam, M0, t_max, seed), range(replicas))


# ---------------------------------------------------------------------------
# jump rates

@dataclass
class RateRow:
    """A row of Q^[n] at ``state``: positive rates to other states."""

    state: FiniteStructure
    rates: dict[FiniteStructure, float]
    stderr: dict[FiniteStructure, float]
    exact: bool

    @property
    def total(self) -> float:
        return sum(self.rates.values())

    def to_json(self) -> dict:
        return {
            "state": self.state.to_dict(),
            "exact": self.exact,
            "total": self.total,
            "rates": [{"target": T.to_dict(), "rate": self.rates[T], "stderr": self.stderr.get(T, 0.0)}
                      for T in sorted(self.rates)],
        }


# beyond this many labelings paintbox rates fall back to Monte Carlo
_MAX_LABELINGS = 200_000


def _paintbox_law(count: int, s: RankedSimplexPoint):
    """Yield (probability, labels) over boxes 0..L-1 and dust (-1) for ``count`` items."""
    probs = list(s.s) + [s.dust]
    L = len(s.s)
    for labels in itertools.product(range(L + 1), repeat=count):
        p = 1.0
        for lab in labels:
            p *= probs[lab]
            if p == 0.0:
                break
        if p > 0.0:
            yield p, labels


def _group(items: Sequence[frozenset], labels: Sequence[int], L: int) -> list[frozenset]:
    merged: dict[int, set] = {}
    for idx, (b, lab) in enumerate(zip(items, labels)):
        key = lab if lab < L else -(idx + 1)
        merged.setdefault(key, set()).update(b)
    return [frozenset(v) for v in merged.values()]


def jump_rates(lam: RateMeasure, S: FiniteStructure, *, samples: int = 4_000, seed: int = 0) -> RateRow:
    """``Q^[n](S, ·)``: exact where the component allows it, Monte Carlo otherwise."""
    n, sig = S.n, S.sig
    rates: dict[FiniteStructure, float] = {}
    var: dict[FiniteStructure, float] = {}
    exact = True

    def add(T, r, v=0.0):
        if T != S and r > 0:
            rates[T] = rates.get(T, 0.0) + r
            var[T] = var.get(T, 0.0) + v

    for a_idx, atom in enumerate(lam.atoms):
        if atom.sampler.deterministic:
            add(apply(atom.sampler.sample(0), S, check=False), atom.rate)
            continue
        exact = False
        counts: dict[FiniteStructure, int] = {}
        for r in range(samples):
            T = apply(atom.sampler.sample(derive_seed(seed, "rates", a_idx, r)), S, check=False)
            counts[T] = counts.get(T, 0) + 1
        for T, c in counts.items():
            p = c / samples
            add(T, atom.rate * p, atom.rate ** 2 * p * (1 - p) / samples)

    if lam.has_partition_families:
        blks = blocks(S)
        k = len(blks)
        for i, j in itertools.combinations(range(k), 2):
            add(_merge_pair(blks, i, j, n, sig), lam.kingman)
        for fam in lam.paintbox:
            for w, s in fam.atoms:
                L = len(s.s)
                if fam.mode == "coag":
                    groups = [(blks, None)]
                else:
                    groups = [([frozenset({i}) for i in sorted(b)], K) for K, b in enumerate(blks)]
                for items, K in groups:
                    if (L + 1) ** len(items) > _MAX_LABELINGS:
                        exact = False
                        _paintbox_mc(add, blks, items, K, w, s, n, sig, samples, seed)
                        continue
                    for p, labels in _paintbox_law(len(items), s):
                        pieces = _group(items, labels, L)
                        out = pieces if K is None else [b for idx, b in enumerate(blks) if idx != K] + pieces
                        add(partition_from_blocks(out, n, sig), w * p)
        if lam.erosion > 0:
            for b in blks:
                if len(b) > 1:
                    for i in sorted(b):
                        add(_isolate(blks, i, n, sig), lam.erosion)
    stderr = {T: math.sqrt(v) for T, v in var.items()}
    return RateRow(S, rates, stderr, exact)


def _paintbox_mc(add, blks, items, K, w, s, n, sig, samples, seed):
    rng = rng_for(seed, "paintbox-rates", K if K is not None else -1)
    edges = np.cumsum(s.s)
    counts: dict[FiniteStructure, int] = {}
    for _ in range(samples):
        labels = np.searchsorted(edges, rng.random(len(items)), side="right")
        pieces = _group(items, labels.tolist(), len(s.s))
        out = pieces if K is None else [b for idx, b in enumerate(blks) if idx != K] + pieces
        T = partition_from_blocks(out, n, sig)
        counts[T] = counts.get(T, 0) + 1
    for T, c in counts.items():
        p = c / samples
        add(T, w * p, w * w * p * (1 - p) / samples)


# ---------------------------------------------------------------------------
# lifting anchored kernels

def lift_alpha_measure(atoms: Iterable[tuple[float, KernelSampler]], alpha, n: int, *,
                       check_seeds: int = 3) -> RateMeasure:
    """One conjugated copy of each anchored atom per multiset s ⊆ [n] of type α."""
    from .levyito import IntegerPartition, check_anchored, multisets_of_type, phi_s_alpha

    alpha = alpha if isinstance(alpha, IntegerPartition) else IntegerPartition(tuple(alpha))
    atoms = [(float(r), smp) for r, smp in atoms]
    for r, smp in atoms:
        if not r > 0:
            raise ValidationError(f"atom rate must be positive, got {r}")
        check_anchored(smp, alpha, seeds=check_seeds)
    lifted = []
    for s in multisets_of_type(alpha, n):
        sigma = phi_s_alpha(s, n)
        for r, smp in atoms:
            lifted.append(RatedAtom(r, ConjugatedSampler(smp, sigma)))
    return RateMeasure(tuple(lifted))
