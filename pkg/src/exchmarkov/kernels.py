"""Lipschitz kernels as coherent families of maps on truncations.

A :class:`Kernel` maps X_[n] to X_[n] for every n up to ``n_max`` and is
expected to commute with restriction. Kernels are rule objects holding
their parameters (and seeds), so they are cheap to build for large n.
Kernels that know where they can act expose it through ``changes``,
which lets the locality calculus avoid brute-force probing.

A :class:`KernelSampler` turns a seed into a kernel; it is the finite
stand-in for a probability measure on kernels.
"""
from __future__ import annotations

import itertools
from typing import Callable, Iterable, Sequence

import numpy as np

from ._seeding import derive_seed, hash_uniform, rng_for
from .classes import FiniteClass, blocks, get_class, partition_from_blocks, universal_class
from .errors import CapacityError, DomainError, MalformedInputError, NotFoundError, ValidationError
from .structures import (FiniteStructure, Injection, apply_injection, labeled_restriction, restrict)
from .classes import canonical_embedding
from .verdict import FAIL, PASS, Verdict

UNBOUNDED = 1 << 31

# exhaustive checks switch to sampling above this many states
EXHAUSTIVE_LIMIT = 10_000


class Kernel:
    """Base class: subclasses implement ``_apply`` on a member over [n]."""

    tag = "user"

    def __init__(self, cls: FiniteClass, n_max: int = UNBOUNDED):
        self.cls = cls
        self.n_max = n_max

    def _apply(self, M: FiniteStructure) -> FiniteStructure:
        raise NotImplementedError

    def changes(self, j: int, n: int) -> frozenset | None:
        """Tuples over [n] of relation ``j`` (1-based) where some input is changed.

        ``None`` means the kernel does not know and callers must probe.
        """
        return None

    def describe(self) -> dict:
        return {"kind": self.tag}

    def __call__(self, M: FiniteStructure) -> FiniteStructure:
        return apply(self, M)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.describe()})"


def apply(F: Kernel, M: FiniteStructure, *, check: bool = True) -> FiniteStructure:
    """``F^[n](M)`` with capacity and domain checks."""
    if check:
        if M.n > F.n_max:
            raise CapacityError(f"kernel defined up to n={F.n_max}, got n={M.n}")
        if not F.cls.contains(M):
            raise DomainError(f"input is not a member of {F.cls!r}")
    return F._apply(M)


class IdentityKernel(Kernel):
    tag = "identity"

    def _apply(self, M):
        return M

    def changes(self, j, n):
        return frozenset()


class FunctionKernel(Kernel):
    """User rule ``M -> M'``; coherence is the caller's responsibility."""

    def __init__(self, cls, rule: Callable[[FiniteStructure], FiniteStructure], n_max: int = UNBOUNDED,
                 tag: str = "user", changes_fn: Callable[[int, int], frozenset] | None = None):
        super().__init__(cls, n_max)
        self.rule = rule
        self.tag = tag
        self._changes_fn = changes_fn

    def _apply(self, M):
        return self.rule(M)

    def changes(self, j, n):
        return self._changes_fn(j, n) if self._changes_fn is not None else None


# ---------------------------------------------------------------------------
# partitions: coagulation and fragmentation on block indices

def _labels_of(pi: FiniteStructure) -> list[int]:
    lab = [0] * pi.n
    for b, block in enumerate(blocks(pi)):
        for i in block:
            lab[i - 1] = b
    return lab


def paintbox_labels(s: Sequence[float], seed: int, n: int) -> list[int]:
    """Paintbox assignment of [n]: box i with probability s_i, else a singleton.

    Labels come from hashed uniforms, so the partition is projective in n.
    """
    if n == 0:
        return []
    u = hash_uniform(seed, "paint", np.arange(1, n + 1))
    edges = np.cumsum(np.asarray(s, dtype=float))
    box = np.searchsorted(edges, u, side="right")
    return [int(b) if b < len(s) else -(i + 1) for i, b in enumerate(box)]


class CoagKernel(Kernel):
    """``Coag(·, π)``: block j of the output is the union of input blocks B_i, i in π_j.

    Blocks are ordered by least element. ``pi`` is a fixed partition of
    [N]; alternatively ``labels_fn(k)`` returns labels of π on [k].
    """

    tag = "coag"

    def __init__(self, pi: FiniteStructure | None = None, *, labels_fn: Callable[[int], list[int]] | None = None,
                 n_max: int | None = None, cls: FiniteClass | None = None, params: dict | None = None):
        cls = cls or get_class("partitions")
        if pi is not None:
            if not get_class("partitions").member(pi):
                raise DomainError("coag kernel needs an equivalence-relation structure for π")
            self.pi = pi
            self._pi_labels = _labels_of(pi)
            n_max = pi.n if n_max is None else n_max
        else:
            if labels_fn is None:
                raise MalformedInputError("coag kernel needs π or a label function")
            self.pi = None
            self._pi_labels = None
            n_max = UNBOUNDED if n_max is None else n_max
        super().__init__(cls, n_max)
        self._labels_fn = labels_fn
        self.params = params or {}

    def pi_labels(self, k: int) -> list[int]:
        if self._pi_labels is not None:
            if k <= len(self._pi_labels):
                return self._pi_labels[:k]
            # beyond the supplied π every index is its own block
            return self._pi_labels + [-(i + 1) for i in range(len(self._pi_labels), k)]
        return self._labels_fn(k)

    def _apply(self, M):
        blks = blocks(M)
        labels = self.pi_labels(len(blks))
        merged: dict[int, set[int]] = {}
        for blk, lab in zip(blks, labels):
            merged.setdefault(lab, set()).update(blk)
        return partition_from_blocks(merged.values(), M.n, M.sig)

    def describe(self):
        if self.pi is not None:
            return {"kind": "coag", "pi": self.pi.to_dict()}
        return {"kind": "coag", **self.params}


class FragKernel(Kernel):
    """``Frag(·, π'', k)``: split the k-th block by the blocks of π''."""

    tag = "frag"

    def __init__(self, pi2: FiniteStructure | None, k: int, *, labels_fn: Callable[[int], list[int]] | None = None,
                 n_max: int | None = None, cls: FiniteClass | None = None, params: dict | None = None):
        cls = cls or get_class("partitions")
        if k < 1:
            raise MalformedInputError("block index k must be positive")
        if pi2 is not None:
            if not get_class("partitions").member(pi2):
                raise DomainError("frag kernel needs an equivalence-relation structure for π''")
            self._pi_labels = _labels_of(pi2)
            n_max = pi2.n if n_max is None else n_max
        else:
            if labels_fn is None:
                raise MalformedInputError("frag kernel needs π'' or a label function")
            self._pi_labels = None
            n_max = UNBOUNDED if n_max is None else n_max
        super().__init__(cls, n_max)
        self.pi2 = pi2
        self.k = k
        self._labels_fn = labels_fn
        self.params = params or {}

    def pi_labels(self, n: int) -> list[int]:
        if self._pi_labels is not None:
            if n <= len(self._pi_labels):
                return self._pi_labels[:n]
            return self._pi_labels + [-(i + 1) for i in range(len(self._pi_labels), n)]
        return self._labels_fn(n)

    def _apply(self, M):
        blks = blocks(M)
        if self.k > len(blks):
            return M
        labels = self.pi_labels(M.n)
        target = blks[self.k - 1]
        pieces: dict[int, list[int]] = {}
        for i in sorted(target):
            pieces.setdefault(labels[i - 1], []).append(i)
        new_blocks = [b for idx, b in enumerate(blks) if idx != self.k - 1] + list(pieces.values())
        return partition_from_blocks(new_blocks, M.n, M.sig)

    def describe(self):
        if self.pi2 is not None:
            return {"kind": "frag", "pi": self.pi2.to_dict(), "k": self.k}
        return {"kind": "frag", "k": self.k, **self.params}


def coag_kernel(pi: FiniteStructure, n_max: int | None = None) -> CoagKernel:
    """Coagulation by a fixed partition π (over [n_max] by default)."""
    return CoagKernel(pi, n_max=n_max)


def frag_kernel(pi2: FiniteStructure, k: int, n_max: int | None = None) -> FragKernel:
    """Fragmentation of the k-th block by π''."""
    return FragKernel(pi2, k, n_max=n_max)


def coag(x: FiniteStructure, pi: FiniteStructure) -> FiniteStructure:
    """``Coag(x, π)`` for partitions given as structures."""
    return CoagKernel(pi, n_max=max(pi.n, x.n))._apply(x)


def frag(x: FiniteStructure, pi2: FiniteStructure, k: int) -> FiniteStructure:
    """``Frag(x, π'', k)`` for partitions given as structures."""
    return FragKernel(pi2, k, n_max=max(pi2.n, x.n))._apply(x)


# ---------------------------------------------------------------------------
# sets: cut-and-paste and single-site kernels

class CutPasteKernel(Kernel):
    """Coordinatewise resampling on sets: x'_k = Y0_k if x_k = 0 else Y1_k."""

    tag = "cutpaste"

    def __init__(self, theta0: float, theta1: float, seed: int, cls: FiniteClass | None = None):
        for name, th in (("theta0", theta0), ("theta1", theta1)):
            if not 0.0 <= th <= 1.0:
                raise ValidationError(f"{name}={th} is not a probability")
        super().__init__(cls or get_class("sets"))
        self.theta0, self.theta1, self.seed = float(theta0), float(theta1), int(seed)

    def _ys(self, n):
        idx = np.arange(1, n + 1)
        y0 = hash_uniform(self.seed, "Y0", idx) < self.theta0
        y1 = hash_uniform(self.seed, "Y1", idx) < self.theta1
        return y0, y1

    def _apply(self, M):
        n = M.n
        if n == 0:
            return M
        y0, y1 = self._ys(n)
        x = np.zeros(n, dtype=bool)
        for (i,) in M.relations[0]:
            x[i - 1] = True
        out = np.where(x, y1, y0)
        return FiniteStructure(M.sig, n, [frozenset((int(i),) for i in np.flatnonzero(out) + 1)], validate=False)

    def changes(self, j, n):
        if j != 1:
            return frozenset()
        y0, y1 = self._ys(n)
        return frozenset((int(i),) for i in np.flatnonzero(y0 | ~y1) + 1)

    def describe(self):
        return {"kind": "cutpaste", "theta0": self.theta0, "theta1": self.theta1, "seed": self.seed}


def cutpaste_kernel(theta0: float, theta1: float, seed: int) -> CutPasteKernel:
    return CutPasteKernel(theta0, theta1, seed)


class SiteKernel(Kernel):
    """Acts on one element of a unary relation: flip it, or set it from a seeded coin."""

    tag = "single-site"

    def __init__(self, site: int, mode: str = "flip", theta: float = 0.5, seed: int = 0,
                 cls: FiniteClass | None = None):
        if site < 1:
            raise MalformedInputError("site must be a positive element")
        if mode not in ("flip", "resample"):
            raise MalformedInputError(f"unknown site mode {mode!r}")
        super().__init__(cls or get_class("sets"))
        self.site, self.mode, self.theta, self.seed = site, mode, float(theta), int(seed)

    def _value(self):
        return float(hash_uniform(self.seed, "site", self.site)) < self.theta

    def _apply(self, M):
        if self.site > M.n:
            return M
        rel = set(M.relations[0])
        t = (self.site,)
        present = t in rel
        new = (not present) if self.mode == "flip" else self._value()
        if new == present:
            return M
        rel.symmetric_difference_update({t})
        return M.replace(0, rel)

    def changes(self, j, n):
        if j != 1 or self.site > n:
            return frozenset()
        return frozenset({(self.site,)})

    def describe(self):
        return {"kind": "site", "site": self.site, "mode": self.mode, "theta": self.theta, "seed": self.seed}


def site_kernel(site: int, mode: str = "flip", theta: float = 0.5, seed: int = 0) -> SiteKernel:
    return SiteKernel(site, mode, theta, seed)


# ---------------------------------------------------------------------------
# ternary resamplers

class ResamplerKernel(Kernel):
    """Fair-coin resampling of a ternary relation on a pattern anchored at ``a``.

    * ``ex1``: entries (a, b, c) become A[b, c]
    * ``ex2``: entries (a, a, c) become A[c]
    * ``ex3``: entries (a, b, b) become A[b]
    """

    tag = "resampler"

    def __init__(self, anchor: int, variant: str, seed: int, cls: FiniteClass | None = None):
        if variant not in ("ex1", "ex2", "ex3"):
            raise MalformedInputError(f"unknown resampler variant {variant!r}")
        cls = cls or get_class("ternary")
        if cls.sig.arities[0] != 3:
            raise MalformedInputError("resampler kernels act on a ternary first relation")
        super().__init__(cls)
        self.anchor, self.variant, self.seed = int(anchor), variant, int(seed)

    def _sites(self, n):
        a = self.anchor
        if a > n:
            return [], np.zeros(0, dtype=bool)
        idx = np.arange(1, n + 1)
        if self.variant == "ex1":
            b, c = np.meshgrid(idx, idx, indexing="ij")
            b, c = b.ravel(), c.ravel()
            coins = hash_uniform(self.seed, "A2", b, c) < 0.5
            sites = list(zip([a] * b.size, b.tolist(), c.tolist()))
        elif self.variant == "ex2":
            coins = hash_uniform(self.seed, "A1", idx) < 0.5
            sites = [(a, a, c) for c in idx.tolist()]
        else:
            coins = hash_uniform(self.seed, "A1", idx) < 0.5
            sites = [(a, b, b) for b in idx.tolist()]
        return sites, coins

    def _apply(self, M):
        sites, coins = self._sites(M.n)
        if not sites:
            return M
        rel = set(M.relations[0])
        rel.difference_update(sites)
        rel.update(t for t, c in zip(sites, coins.tolist()) if c)
        rels = list(M.relations)
        rels[0] = frozenset(rel)
        return FiniteStructure(M.sig, M.n, rels, validate=False)

    def changes(self, j, n):
        if j != 1:
            return frozenset()
        return frozenset(self._sites(n)[0])

    def describe(self):
        return {"kind": "resampler", "variant": self.variant, "anchor": self.anchor, "seed": self.seed}


def single_site_resampler(s, variant: str, seed: int) -> ResamplerKernel:
    """Resampler anchored at the element of ``s`` ({a} for ex1/ex3, {a, a} for ex2)."""
    from .levyito import Multiset

    s = s if isinstance(s, Multiset) else Multiset.of(s)
    rng_s = s.rng
    if len(rng_s) != 1:
        raise ValidationError(f"resampler anchor {s} must use a single element")
    (a,) = rng_s
    want = 2 if variant == "ex2" else 1
    if s.mult(a) != want:
        raise ValidationError(f"variant {variant} expects the anchor with multiplicity {want}, got {s}")
    return ResamplerKernel(a, variant, seed)


# ---------------------------------------------------------------------------
# kernels from a target pair (Mtrunc, Ytrunc)

class TargetKernel(Kernel):
    """``S -> Ytrunc^ρ_S`` with ρ_S the canonical embedding of S into Mtrunc."""

    tag = "from-target"

    def __init__(self, Mtrunc: FiniteStructure, Ytrunc: FiniteStructure, cls: FiniteClass, n_max: int):
        super().__init__(cls, n_max)
        self.Mtrunc, self.Ytrunc = Mtrunc, Ytrunc

    def _apply(self, M):
        rho = canonical_embedding(M, self.Mtrunc)
        return apply_injection(self.Ytrunc, rho)

    def describe(self):
        return {"kind": "from_target", "M": self.Mtrunc.to_dict(), "Y": self.Ytrunc.to_dict(),
                "class": self.cls.id}


def kernel_from_target(Mtrunc: FiniteStructure, Ytrunc: FiniteStructure,
                       cls: FiniteClass | None = None) -> TargetKernel:
    """Kernel reading Ytrunc along canonical embeddings into Mtrunc.

    ``n_max`` is the largest n (within the class enumeration bound) such
    that every member of X_[n] embeds into Mtrunc.
    """
    if Mtrunc.sig != Ytrunc.sig or Mtrunc.n != Ytrunc.n:
        raise MalformedInputError("Mtrunc and Ytrunc must share signature and domain")
    cls = cls or universal_class(Mtrunc.sig)
    n_max = 0
    for n in range(1, min(Mtrunc.n, cls.enum_bound) + 1):
        try:
            for S in cls.enumerate(n):
                canonical_embedding(S, Mtrunc)
        except (NotFoundError, CapacityError):
            break
        n_max = n
    return TargetKernel(Mtrunc, Ytrunc, cls, n_max)


# ---------------------------------------------------------------------------
# combinators

class ComposedKernel(Kernel):
    tag = "compose"

    def __init__(self, outer: Kernel, inner: Kernel):
        super().__init__(outer.cls, min(outer.n_max, inner.n_max))
        self.outer, self.inner = outer, inner

    def _apply(self, M):
        return self.outer._apply(self.inner._apply(M))

    def describe(self):
        return {"kind": "compose", "kernels": [self.outer.describe(), self.inner.describe()]}


def compose(F: Kernel, G: Kernel) -> Kernel:
    """Kernel applying G first, then F."""
    if F.cls != G.cls:
        raise DomainError("cannot compose kernels on different classes")
    if isinstance(G, IdentityKernel):
        return F
    if isinstance(F, IdentityKernel):
        return G
    return ComposedKernel(F, G)


class ConjugatedKernel(Kernel):
    """``(σFσ⁻¹)(M) = F(M^σ)^{σ⁻¹}``, with σ fixing everything above its size.

    On domains smaller than σ the input is first extended by the class's
    canonical extension; for conjugation-invariant F the choice does not
    matter, otherwise the resulting incoherence is visible to
    :func:`check_consistency`.
    """

    tag = "conjugate"

    def __init__(self, F: Kernel, sigma: Injection):
        if not sigma.is_permutation:
            raise MalformedInputError("conjugation needs a permutation")
        super().__init__(F.cls, F.n_max)
        self.inner = F
        self.sigma = sigma
        self._sigma_inv = sigma.inverse()

    def _perm(self, m):
        return self.sigma.extend(m), self._sigma_inv.extend(m)

    def _apply(self, M):
        N = self.sigma.n
        if M.n >= N:
            s, s_inv = self._perm(M.n)
            return apply_injection(self.inner._apply(apply_injection(M, s)), s_inv)
        E = self.cls.extend(M, N)
        return restrict(self._apply(E), M.n)

    def changes(self, j, n):
        N = max(n, self.sigma.n)
        base = self.inner.changes(j, N)
        if base is None:
            return None
        s = self.sigma.extend(N)
        return frozenset(t2 for t2 in (tuple(s(c) for c in t) for t in base) if max(t2) <= n)

    def describe(self):
        return {"kind": "conjugate", "kernel": self.inner.describe(), "perm": self.sigma.to_json()}


def conjugate(F: Kernel, sigma: Injection) -> Kernel:
    return ConjugatedKernel(F, sigma)


def identity_kernel(cls: FiniteClass) -> IdentityKernel:
    return IdentityKernel(cls)


def tabulate(F: Kernel, n: int) -> dict[FiniteStructure, FiniteStructure]:
    """Full table of F on X_[n] (for exhaustive tests, n <= 6)."""
    if n > 6:
        raise CapacityError("tabulation is limited to n <= 6")
    return {M: F._apply(M) for M in F.cls.enumerate(n)}


# ---------------------------------------------------------------------------
# contracts

def _states(cls: FiniteClass, n: int, samples: int, seed: int) -> tuple[Iterable[FiniteStructure], str]:
    if cls.tabulable(n, EXHAUSTIVE_LIMIT):
        return cls.enumerate(n), "exhaustive"
    rng = rng_for(seed, "states", n)
    return (cls.random_member(n, rng) for _ in range(samples)), "sampled"


def check_consistency(F: Kernel, n: int, *, samples: int = 10_000, seed: int = 0) -> Verdict:
    """Coherence ``F(S'|[n]) = F(S')|[n]`` over S' in X_[n+1]."""
    if n + 1 > F.n_max:
        raise CapacityError(f"consistency at n={n} needs n+1 <= n_max={F.n_max}")
    states, regime = _states(F.cls, n + 1, samples, seed)
    count = 0
    for S in states:
        count += 1
        small = F._apply(restrict(S, n))
        big = restrict(F._apply(S), n)
        if small != big:
            return Verdict(FAIL, {"S": S.to_dict(), "F_of_restriction": small.to_dict(),
                                  "restriction_of_F": big.to_dict()}, {"regime": regime, "n": n})
    return Verdict(PASS, details={"regime": regime, "n": n, "checked": count})


def check_conjugation_invariance(F: Kernel, n: int, *, samples: int = 100_000, seed: int = 0,
                                 subsets: Iterable[Iterable[int]] | None = None) -> Verdict:
    """For all S ⊆ [n] and M, M' with M|_S = M'|_S, require F(M)|_S = F(M')|_S.

    Restrictions keep labels. The witness is the first failing subset in
    (size, lexicographic) order; ``details["failing_subsets"]`` lists one
    witness pair for every failing subset.
    """
    if n > F.n_max:
        raise CapacityError(f"n={n} exceeds n_max={F.n_max}")
    if subsets is None:
        subsets = [c for k in range(1, n + 1) for c in itertools.combinations(range(1, n + 1), k)]
    else:
        subsets = [tuple(sorted(s)) for s in subsets]
    if F.cls.tabulable(n, EXHAUSTIVE_LIMIT):
        members = F.cls.enumerate(n)
        images = [F._apply(M) for M in members]
        failing = []
        for S in subsets:
            groups: dict[tuple, tuple[int, tuple]] = {}
            for idx, (M, FM) in enumerate(zip(members, images)):
                key = labeled_restriction(M, S)
                out = labeled_restriction(FM, S)
                first = groups.get(key)
                if first is None:
                    groups[key] = (idx, out)
                elif first[1] != out:
                    failing.append(_conj_witness(S, members[first[0]], members[idx], images[first[0]], images[idx]))
                    break
        details = {"regime": "exhaustive", "n": n, "failing_subsets": failing}
        if failing:
            return Verdict(FAIL, failing[0], details)
        return Verdict(PASS, details=details)
    # sampled regime: random M, random S, M' agreeing with M on S
    rng = rng_for(seed, "conj-inv", n)
    subsets = list(subsets)
    for _ in range(samples):
        S = subsets[int(rng.integers(len(subsets)))]
        M = F.cls.random_member(n, rng)
        R = F.cls.random_member(n, rng)
        keep = frozenset(S)
        rels = [frozenset(t for t in rm if keep.issuperset(t)) | frozenset(t for t in rr if not keep.issuperset(t))
                for rm, rr in zip(M.relations, R.relations)]
        M2 = FiniteStructure(M.sig, n, rels, validate=False)
        if not F.cls.contains(M2):
            continue
        FM, FM2 = F._apply(M), F._apply(M2)
        if labeled_restriction(FM, S) != labeled_restriction(FM2, S):
            w = _conj_witness(S, M, M2, FM, FM2)
            return Verdict(FAIL, w, {"regime": "sampled", "n": n, "failing_subsets": [w]})
    return Verdict(PASS, details={"regime": "sampled", "n": n, "trials": samples})


def _conj_witness(S, M, M2, FM, FM2) -> dict:
    return {"S": list(S), "M": M.to_dict(), "M2": M2.to_dict(), "F_M": FM.to_dict(), "F_M2": FM2.to_dict()}


# ---------------------------------------------------------------------------
# samplers

class KernelSampler:
    """Seed -> Kernel. ``deterministic`` marks point masses."""

    tag = "user"
    deterministic = False

    def __init__(self, cls: FiniteClass):
        self.cls = cls

    def sample(self, seed: int) -> Kernel:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.tag}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.describe()})"


class PointMass(KernelSampler):
    deterministic = True

    def __init__(self, kernel: Kernel):
        super().__init__(kernel.cls)
        self.kernel = kernel
        self.tag = "identity" if isinstance(kernel, IdentityKernel) else "point"

    def sample(self, seed):
        return self.kernel

    def describe(self):
        if self.tag == "identity":
            return {"kind": "identity"}
        return {"kind": "point", "kernel": self.kernel.describe()}


def point_mass(F: Kernel) -> PointMass:
    return PointMass(F)


def identity_sampler(cls: FiniteClass) -> PointMass:
    return PointMass(IdentityKernel(cls))


class CutPasteSampler(KernelSampler):
    tag = "cutpaste"

    def __init__(self, theta0: float, theta1: float):
        super().__init__(get_class("sets"))
        CutPasteKernel(theta0, theta1, 0)  # validate
        self.theta0, self.theta1 = float(theta0), float(theta1)

    def sample(self, seed):
        return CutPasteKernel(self.theta0, self.theta1, seed, self.cls)

    def describe(self):
        return {"kind": "cutpaste", "theta0": self.theta0, "theta1": self.theta1}


def validate_simplex_point(s: Sequence[float], mode: str = "coag") -> tuple[float, ...]:
    """Check s is nonincreasing in [0,1] with sum <= 1 and not excluded by the mode."""
    s = tuple(float(v) for v in s)
    if not s:
        raise ValidationError("simplex point must have at least one coordinate")
    if any(v < 0 or v > 1 for v in s):
        raise ValidationError(f"simplex point {list(s)} has coordinates outside [0,1]")
    if any(a < b for a, b in zip(s, s[1:])):
        raise ValidationError(f"simplex point {list(s)} is not nonincreasing")
    if sum(s) > 1 + 1e-12:
        raise ValidationError(f"simplex point {list(s)} sums to more than 1")
    if mode == "coag" and all(v == 0 for v in s):
        raise ValidationError("coagulation paintbox point must not be all zero")
    if mode == "frag" and s[0] == 1 and all(v == 0 for v in s[1:]):
        raise ValidationError("fragmentation paintbox point must not be (1, 0, ...)")
    if mode not in ("coag", "frag"):
        raise ValidationError(f"unknown paintbox mode {mode!r}")
    return s


class PaintboxSampler(KernelSampler):
    """Coag(·, π) or Frag(·, π, k) with π drawn from the paintbox of ``s``."""

    def __init__(self, s: Sequence[float], mode: str = "coag", k: int = 1):
        super().__init__(get_class("partitions"))
        self.s = validate_simplex_point(s, mode)
        self.mode = mode
        self.k = k
        self.tag = f"paintbox-{mode}"

    def sample(self, seed):
        s = self.s
        params = {"s": list(s), "seed": seed}
        fn = _PaintboxLabels(s, seed)
        if self.mode == "coag":
            return CoagKernel(labels_fn=fn, params=params)
        return FragKernel(None, self.k, labels_fn=fn, params=params)

    def describe(self):
        out = {"kind": "paintbox", "s": list(self.s), "mode": self.mode}
        if self.mode == "frag":
            out["k"] = self.k
        return out


class _PaintboxLabels:
    """Picklable label function for a seeded paintbox."""

    def __init__(self, s, seed):
        self.s, self.seed = tuple(s), int(seed)

    def __call__(self, n):
        return paintbox_labels(self.s, self.seed, n)


def pair_partition(i: int, j: int, n: int) -> FiniteStructure:
    """The partition e_{i,j} of [n]: {i, j} together, everything else alone."""
    if not 1 <= i < j <= n:
        raise MalformedInputError(f"need 1 <= i < j <= n, got {i}, {j}, {n}")
    return partition_from_blocks([[i, j]], n)


class KingmanStepSampler(KernelSampler):
    """Coag(·, e_{i,j}) with {i, j} uniform among pairs of [N]."""

    tag = "kingman-step"

    def __init__(self, N: int):
        super().__init__(get_class("partitions"))
        if N < 2:
            raise ValidationError("kingman step sampler needs N >= 2")
        self.N = N

    def sample(self, seed):
        rng = rng_for(seed, "pair")
        i, j = sorted(rng.choice(self.N, size=2, replace=False) + 1)
        return CoagKernel(pair_partition(int(i), int(j), self.N))

    def describe(self):
        return {"kind": "kingman_step", "N": self.N}


class ResamplerSampler(KernelSampler):
    tag = "resampler"

    def __init__(self, variant: str, anchor: int = 1):
        super().__init__(get_class("ternary"))
        self.variant, self.anchor = variant, anchor
        ResamplerKernel(anchor, variant, 0)

    def sample(self, seed):
        return ResamplerKernel(self.anchor, self.variant, seed, self.cls)

    def describe(self):
        return {"kind": "resampler", "variant": self.variant, "anchor": self.anchor}


class SiteSampler(KernelSampler):
    tag = "single-site"

    def __init__(self, site: int = 1, mode: str = "flip", theta: float = 0.5):
        super().__init__(get_class("sets"))
        self.site, self.mode, self.theta = site, mode, theta
        SiteKernel(site, mode, theta)

    @property
    def deterministic(self):
        return self.mode == "flip"

    def sample(self, seed):
        return SiteKernel(self.site, self.mode, self.theta, seed, self.cls)

    def describe(self):
        return {"kind": "site", "site": self.site, "mode": self.mode, "theta": self.theta}


class ConjugatedSampler(KernelSampler):
    tag = "conjugate"

    def __init__(self, base: KernelSampler, sigma: Injection):
        super().__init__(base.cls)
        self.base, self.sigma = base, sigma
        self.deterministic = base.deterministic

    def sample(self, seed):
        return ConjugatedKernel(self.base.sample(seed), self.sigma)

    def describe(self):
        return {"kind": "conjugate", "sampler": self.base.describe(), "perm": self.sigma.to_json()}


class FunctionSampler(KernelSampler):
    """User sampler from a function ``seed -> Kernel``."""

    def __init__(self, cls: FiniteClass, fn: Callable[[int], Kernel], tag: str = "user",
                 deterministic: bool = False):
        super().__init__(cls)
        self.fn, self.tag, self.deterministic = fn, tag, deterministic

    def sample(self, seed):
        return self.fn(seed)


def kernel_seed(master: int, *labels) -> int:
    return derive_seed(master, *labels)
