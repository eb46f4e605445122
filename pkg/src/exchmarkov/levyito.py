"""Multisets, partition types and the change-locality calculus of kernels.

``L_hat`` measures, at finite n, how often a kernel changes tuples whose
multiset contains s and has a given number of further distinct values;
``delta_F`` intersects all multisets with non-negligible ``L_hat`` and
``classify_kernel`` reports the ranked type of that core.
"""
from __future__ import annotations

import itertools
import math
import re
import warnings
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

from ._seeding import derive_seed, rng_for
from .errors import ValidationError
from .kernels import Kernel, KernelSampler
from .structures import Injection

GLOBAL = "global"


@dataclass(frozen=True)
class Multiset:
    """Finitely supported multiset of positive integers; ``items`` is sorted (element, count)."""

    items: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        for e, c in self.items:
            if e < 1 or c < 1:
                raise ValidationError(f"multiset entries need positive element and count, got {e}^{c}")
        if list(self.items) != sorted(self.items) or len({e for e, _ in self.items}) != len(self.items):
            raise ValidationError("multiset items must be sorted with unique elements")

    @classmethod
    def of(cls, data: Iterable[int] | Mapping[int, int] = ()) -> "Multiset":
        """From elements with repetition (``[1, 1, 2]``) or a multiplicity map (``{1: 2, 2: 1}``)."""
        counts = Counter(dict(data)) if isinstance(data, Mapping) else Counter(data)
        return cls(tuple(sorted((int(e), int(c)) for e, c in counts.items() if c > 0)))

    def mult(self, e: int) -> int:
        return dict(self.items).get(e, 0)

    @property
    def counts(self) -> dict[int, int]:
        return dict(self.items)

    @property
    def size(self) -> int:
        return sum(c for _, c in self.items)

    def __len__(self) -> int:
        return self.size

    @property
    def rng(self) -> frozenset[int]:
        return frozenset(e for e, _ in self.items)

    def elements(self) -> list[int]:
        return [e for e, c in self.items for _ in range(c)]

    def subset(self, other: "Multiset") -> bool:
        mine = other.counts
        return all(mine.get(e, 0) >= c for e, c in self.items)

    def meet(self, other: "Multiset") -> "Multiset":
        b = other.counts
        return Multiset.of({e: min(c, b.get(e, 0)) for e, c in self.items})

    def join(self, other: "Multiset") -> "Multiset":
        out = Counter(self.counts)
        for e, c in other.items:
            out[e] = max(out[e], c)
        return Multiset.of(dict(out))

    def oplus(self, other: "Multiset") -> "Multiset":
        return Multiset.of(Counter(self.counts) + Counter(other.counts))

    def restrict(self, keep: Iterable[int]) -> "Multiset":
        keep = set(keep)
        return Multiset(tuple((e, c) for e, c in self.items if e in keep))

    def ranked_order(self) -> tuple[tuple[int, int], ...]:
        """Elements by decreasing multiplicity, ties broken by the larger element first."""
        return tuple(sorted(self.items, key=lambda ec: (-ec[1], -ec[0])))

    def ranked_type(self) -> "IntegerPartition":
        return IntegerPartition(tuple(sorted((c for _, c in self.items), reverse=True)))

    def to_json(self) -> list[int]:
        return self.elements()

    def __str__(self) -> str:
        sup = str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹")
        return "{" + ",".join(f"{e}{str(c).translate(sup)}" if c > 1 else f"{e}" for e, c in self.items) + "}"


def subset(s: Multiset, t: Multiset) -> bool:
    return s.subset(t)


def meet(s: Multiset, t: Multiset) -> Multiset:
    return s.meet(t)


def join(s: Multiset, t: Multiset) -> Multiset:
    return s.join(t)


def oplus(s: Multiset, t: Multiset) -> Multiset:
    return s.oplus(t)


def ranked_type(s: Multiset) -> "IntegerPartition":
    return s.ranked_type()


def ranked_order(s: Multiset) -> tuple[tuple[int, int], ...]:
    return s.ranked_order()


@dataclass(frozen=True)
class IntegerPartition:
    """Nonincreasing positive parts; ``k`` is their sum."""

    parts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(int(p) for p in self.parts))
        if any(p < 1 for p in self.parts):
            raise ValidationError(f"partition parts must be positive, got {list(self.parts)}")
        if any(a < b for a, b in zip(self.parts, self.parts[1:])):
            raise ValidationError(f"partition parts must be nonincreasing, got {list(self.parts)}")

    @property
    def k(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def to_json(self) -> list[int]:
        return list(self.parts)

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.parts)) + ")"


def integer_partitions(k: int) -> list[IntegerPartition]:
    def rec(rest, top):
        if rest == 0:
            yield ()
            return
        for p in range(min(rest, top), 0, -1):
            for tail in rec(rest - p, p):
                yield (p,) + tail
    return [IntegerPartition(p) for p in rec(k, k)]


def canonical_multiset(alpha: IntegerPartition) -> Multiset:
    """``s_α = {1^{α_1}, 2^{α_2}, ...}``."""
    return Multiset(tuple((i, a) for i, a in enumerate(alpha.parts, start=1)))


def multisets_of_type(alpha: IntegerPartition, n: int) -> list[Multiset]:
    """All multisets with range inside [n] and ranked type α."""
    d = len(alpha.parts)
    mults = sorted(set(itertools.permutations(alpha.parts)))
    out = []
    for elems in itertools.combinations(range(1, n + 1), d):
        for m in mults:
            out.append(Multiset(tuple(zip(elems, m))))
    return out


def phi_s_alpha(s: Multiset, n: int, alpha: IntegerPartition | None = None) -> Injection:
    """Permutation of [n] with ``i ↦ s↓_i`` on the first distinct elements, the rest in order."""
    if alpha is not None and s.ranked_type() != alpha:
        raise ValidationError(f"multiset {s} has type {s.ranked_type()}, expected {alpha}")
    if s.rng and max(s.rng) > n:
        raise ValidationError(f"multiset {s} does not fit in [{n}]")
    head = [e for e, _ in s.ranked_order()]
    rest = [e for e in range(1, n + 1) if e not in s.rng]
    return Injection(tuple(head + rest), n)


# ---------------------------------------------------------------------------
# locality probes

def acting_tuples(F: Kernel, j: int, n: int, *, samples: int = 200, seed: int = 0) -> tuple[frozenset, str]:
    """Tuples of relation j (1-based) over [n] at which F changes some input.

    Uses the kernel's own ``changes`` rule when available, exhaustive
    probing of X_[n] when it is small, and a union over sampled inputs
    otherwise. The second return value names the regime.
    """
    known = F.changes(j, n)
    if known is not None:
        return frozenset(known), "rule"
    if F.cls.tabulable(n, 10_000):
        members, regime = F.cls.enumerate(n), "exhaustive"
    else:
        rng = rng_for(seed, "acting", j, n)
        members, regime = (F.cls.random_member(n, rng) for _ in range(samples)), "sampled"
    out: set = set()
    for M in members:
        out |= M.relations[j - 1] ^ F._apply(M).relations[j - 1]
    return frozenset(out), regime


def acts_nontrivially(F: Kernel, j: int, x: tuple[int, ...], *, samples: int = 1_000, seed: int = 0,
                      report: bool = False):
    """Whether some M over [max x] has R_j changed at x by F."""
    x = tuple(int(v) for v in x)
    m = max(x)
    known = F.changes(j, m)
    if known is not None:
        out, regime = x in known, "rule"
    elif F.cls.tabulable(m, 10_000):
        out = any((x in M.relations[j - 1]) != (x in F._apply(M).relations[j - 1]) for M in F.cls.enumerate(m))
        regime = "exhaustive"
    else:
        rng = rng_for(seed, "acts", j, *x)
        out = False
        for _ in range(samples):
            M = F.cls.random_member(m, rng)
            if (x in M.relations[j - 1]) != (x in F._apply(M).relations[j - 1]):
                out = True
                break
        regime = "sampled"
    return (out, regime) if report else out


# ---------------------------------------------------------------------------
# L_hat and the core

@lru_cache(maxsize=None)
def _stirling2(r: int, d: int) -> int:
    if r == d:
        return 1
    if d == 0 or d > r:
        return 0
    return d * _stirling2(r - 1, d) + _stirling2(r - 1, d - 1)


def _falling(n: int, d: int) -> int:
    return math.perm(n, d) if 0 <= d <= n else 0


def qualifying_count(s: Multiset, arity: int, i: int, n: int) -> int:
    """Number of x in [n]^arity whose multiset is s plus r = arity-|s| values outside rng s
    taking exactly r - i distinct values (for |s| = arity: arrangements of s)."""
    r = arity - s.size
    mult = math.factorial(arity)
    for _, c in s.items:
        mult //= math.factorial(c)
    if r == 0:
        return mult
    d = r - i
    return mult // math.factorial(r) * _falling(n - len(s.rng), d) * _stirling2(r, d)


def _check_params(arity: int, i: int, s: Multiset) -> None:
    if s.size > arity:
        raise ValidationError(f"|s|={s.size} exceeds the arity {arity}")
    if s.size < arity and not 0 <= i < arity - s.size:
        raise ValidationError(f"i={i} must satisfy 0 <= i < {arity - s.size}")


def _split(x: tuple[int, ...], s_rng: frozenset) -> tuple[Multiset, int]:
    counts = Counter(x)
    inside = Multiset.of({e: c for e, c in counts.items() if e in s_rng})
    return inside, sum(1 for e in counts if e not in s_rng)


def L_hat(F: Kernel, j: int, i: int, s: Multiset, n: int, *, samples: int = 200, seed: int = 0) -> Fraction:
    """Fraction of qualifying tuples (multiset s plus r - i new distinct values) at which F acts."""
    s = s if isinstance(s, Multiset) else Multiset.of(s)
    arity = F.cls.sig.arities[j - 1]
    _check_params(arity, i, s)
    if s.size == arity:
        i = 0
    total = qualifying_count(s, arity, i, n)
    if total == 0:
        return Fraction(0)
    acting, _ = acting_tuples(F, j, n, samples=samples, seed=seed)
    d = arity - s.size - i
    hits = 0
    for x in acting:
        inside, fresh = _split(x, s.rng)
        if inside == s and fresh == d:
            hits += 1
    return Fraction(hits, total)


@dataclass
class CoreReport:
    """Result of :func:`delta_F`: the core (or ``"global"``) and the L_hat entries above ε."""

    core: Multiset | str
    table: list[dict]
    regime: str
    n: int
    eps: float

    @property
    def type(self) -> IntegerPartition | str:
        return GLOBAL if self.core == GLOBAL else self.core.ranked_type()

    def to_json(self) -> dict:
        return {
            "deltaF": GLOBAL if self.core == GLOBAL else self.core.to_json(),
            "type": GLOBAL if self.core == GLOBAL else self.type.to_json(),
            "Lhat-table": self.table,
            "regime": self.regime,
            "n": self.n,
            "eps": self.eps,
        }


def lhat_table(F: Kernel, n: int, *, samples: int = 200, seed: int = 0) -> tuple[dict, str]:
    """All nonzero L_hat values keyed by (j, i, s), taking the max over nothing else."""
    values: dict[tuple[int, int, Multiset], Fraction] = {}
    regimes = set()
    for j, arity in enumerate(F.cls.sig.arities, start=1):
        acting, regime = acting_tuples(F, j, n, samples=samples, seed=seed)
        regimes.add(regime)
        hits: Counter = Counter()
        for x in acting:
            counts = Counter(x)
            elems = sorted(counts)
            for k in range(len(elems) + 1):
                for V in itertools.combinations(elems, k):
                    s = Multiset(tuple((e, counts[e]) for e in V))
                    r = arity - s.size
                    i = r - (len(elems) - k)
                    hits[(j, i, s)] += 1
        for (jj, i, s), h in hits.items():
            values[(jj, i, s)] = Fraction(h, qualifying_count(s, arity, i, n))
    regime = "rule" if regimes == {"rule"} else ("sampled" if "sampled" in regimes else "exhaustive")
    return values, regime


def delta_F(F: Kernel, n: int = 60, eps: float = 0.1, *, samples: int = 200, seed: int = 0) -> CoreReport:
    """Meet of all multisets s with max_{j,i} L_hat(s) > ε, or ``"global"`` when that meet is empty."""
    if not eps > 0:
        raise ValidationError("eps must be positive")
    n = min(n, F.n_max)
    values, regime = lhat_table(F, n, samples=samples, seed=seed)
    best: dict[Multiset, tuple[Fraction, int, int]] = {}
    for (j, i, s), v in values.items():
        if s not in best or v > best[s][0]:
            best[s] = (v, j, i)
    chosen = sorted((s for s, (v, _, _) in best.items() if v > eps), key=lambda s: (s.size, s.items))
    core: Multiset | None = None
    for s in chosen:
        core = s if core is None else core.meet(s)
    table = [{"s": s.to_json(), "j": F.cls.sig.names[best[s][1] - 1], "i": best[s][2], "value": float(best[s][0])}
             for s in sorted(chosen, key=lambda s: (-best[s][0], s.size, s.items))[:50]]
    if core is None or core.size == 0:
        return CoreReport(GLOBAL, table, regime, n, eps)
    return CoreReport(core, table, regime, n, eps)


def classify_kernel(F: Kernel, n: int = 60, eps: float = 0.1, *, samples: int = 200, seed: int = 0,
                    stabilization: bool = True) -> dict:
    """Core, ranked type and the L_hat table; adds an n vs 2n stabilization diagnostic when possible."""
    rep = delta_F(F, n, eps, samples=samples, seed=seed)
    out = rep.to_json()
    if stabilization and F.n_max >= 2 * rep.n and rep.core != GLOBAL:
        diffs = []
        for row in rep.table[:10]:
            s = Multiset.of(row["s"])
            j = F.cls.sig.index(row["j"]) + 1
            big = L_hat(F, j, row["i"], s, 2 * rep.n, samples=samples, seed=seed)
            diffs.append(abs(float(big) - row["value"]))
        out["stabilization"] = {"max_abs_diff_n_vs_2n": max(diffs, default=0.0), "heuristic": True}
    return out


# ---------------------------------------------------------------------------
# anchoring and measures

def check_anchored(sampler: KernelSampler, alpha: IntegerPartition, *, seeds: int = 3, n: int | None = None) -> None:
    """Raise unless sampled kernels only act on tuples whose multiset contains s_α."""
    s_alpha = canonical_multiset(alpha)
    sig = sampler.cls.sig
    n = n or len(alpha.parts) + sig.max_arity
    trials = 1 if sampler.deterministic else seeds
    for t in range(trials):
        F = sampler.sample(derive_seed(0, "anchor", t))
        for j in range(1, len(sig) + 1):
            acting, _ = acting_tuples(F, j, n)
            for x in sorted(acting):
                if not s_alpha.subset(Multiset.of(x)):
                    raise ValidationError(
                        f"kernel acts at {sig.names[j - 1]}{x}, which does not contain s_alpha={s_alpha}")


def _family_kernels(lam, label: str, samples: int, seed: int, n: int) -> list[Kernel]:
    from .classes import partition_from_blocks
    from .kernels import CoagKernel, FragKernel, PaintboxSampler, pair_partition

    rng = rng_for(seed, "classify", label)
    out: list[Kernel] = []
    if label == "kingman":
        for _ in range(samples):
            i, j = sorted(int(v) for v in rng.choice(n, size=2, replace=False) + 1)
            out.append(CoagKernel(pair_partition(i, j, n)))
    elif label == "erosion":
        for _ in range(samples):
            m = int(rng.integers(1, n + 1))
            k = int(rng.integers(1, n + 1))
            rest = [e for e in range(1, n + 1) if e != m]
            out.append(FragKernel(partition_from_blocks([rest, [m]], n), k))
    else:
        f, i = (int(v) for v in re.match(r"paintbox\[(\d+)\]\[(\d+)\]", label).groups())
        fam = lam.paintbox[f]
        _, s = fam.atoms[i]
        smp = PaintboxSampler(s.s, fam.mode)
        for _ in range(samples):
            kseed = int(rng.integers(0, 1 << 62))
            if fam.mode == "frag":
                smp.k = int(rng.integers(1, n + 1))
            out.append(smp.sample(kseed))
    return out


def classify_measure(lam, n: int = 60, eps: float = 0.1, samples: int = 20, seed: int = 0,
                     dap_check_max: int = 4) -> dict:
    """Majority Lévy–Itô type per component of a rate measure, with disagreement counts."""
    from .classes import check_ndap

    warn = []
    cls = lam.cls
    if cls is not None:
        for k in range(2, min(n, dap_check_max) + 1):
            try:
                v = check_ndap(cls, k)
            except Exception as exc:  # enumeration limits
                warn.append(f"could not check {k}-DAP: {exc}")
                break
            if v.failed:
                warn.append(f"class {cls.id or 'custom'} fails {k}-DAP; the decomposition is not guaranteed")
                break
    for w in warn:
        warnings.warn(w, stacklevel=2)
    report = []
    for idx, (label, rate, sampler) in enumerate(lam.components()):
        if sampler is not None:
            trials = 1 if sampler.deterministic else samples
            kernels = [sampler.sample(derive_seed(seed, "classify", idx, t)) for t in range(trials)]
        else:
            kernels = _family_kernels(lam, label, samples, seed, n)
        types = []
        for F in kernels:
            rep = delta_F(F, n, eps, seed=seed)
            types.append(GLOBAL if rep.core == GLOBAL else str(rep.type))
        tally = Counter(types)
        majority, count = max(tally.items(), key=lambda kv: (kv[1], kv[0]))
        report.append({"component": label, "rate": rate, "type": majority,
                       "disagreements": len(types) - count, "samples": len(types), "tally": dict(tally)})
    return {"components": report, "warnings": warn, "n": n, "eps": eps}
