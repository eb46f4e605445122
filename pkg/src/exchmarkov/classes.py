"""Finite classes of structures, Fraïssé-property checkers, limit samplers.

A :class:`FiniteClass` is a membership predicate plus enumeration and
sampling helpers. Builtin classes are looked up with :func:`get_class`.
HP and n-DAP are decided exactly within their bounds; JEP and DAP are
bounded searches that answer ``unknown`` instead of guessing.
"""
from __future__ import annotations

import itertools
import json
import math
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from ._seeding import hash_uniform
from .errors import CapacityError, MalformedInputError, NotFoundError, UnsupportedClassError
from .structures import (FiniteStructure, Injection, Signature, apply_injection, canonical_form,
                         restrict, _tuples_with_last)
from .verdict import FAIL, PASS, UNKNOWN, Verdict

SET_SIG = Signature.of(("R", 1))
COLOR_SIG = Signature.of(("R", 1), ("B", 1))
BINARY_SIG = Signature.of(("R", 2))
COLORED_GRAPH_SIG = Signature.of(("P", 1), ("R", 2))
TERNARY_SIG = Signature.of(("R", 3))

# exhaustive enumeration is refused above this many candidate tuples
_GENERIC_TUPLE_LIMIT = 22


# ---------------------------------------------------------------------------
# partition helpers (equivalence-relation structures)

def blocks(M: FiniteStructure) -> list[frozenset[int]]:
    """Blocks of an equivalence-relation structure, ordered by least element."""
    rel = M.relations[0]
    seen = [False] * (M.n + 1)
    out = []
    nbrs: dict[int, list[int]] = {}
    for a, b in rel:
        nbrs.setdefault(a, []).append(b)
    for i in range(1, M.n + 1):
        if not seen[i]:
            block = frozenset(nbrs.get(i, ())) | {i}
            for j in block:
                seen[j] = True
            out.append(block)
    return out


def partition_from_blocks(blks: Iterable[Iterable[int]], n: int, sig: Signature = BINARY_SIG) -> FiniteStructure:
    """Equivalence-relation structure whose classes are ``blks`` (missing elements become singletons)."""
    covered: set[int] = set()
    tuples = []
    for b in blks:
        b = sorted(set(b))
        for i in b:
            if not 1 <= i <= n:
                raise MalformedInputError(f"block element {i} outside [1,{n}]")
            if i in covered:
                raise MalformedInputError(f"element {i} appears in two blocks")
        covered.update(b)
        tuples.extend((i, j) for i in b for j in b)
    tuples.extend((i, i) for i in range(1, n + 1) if i not in covered)
    return FiniteStructure(sig, n, [frozenset(tuples)], validate=False)


def partition_from_labels(labels: Sequence[int], sig: Signature = BINARY_SIG) -> FiniteStructure:
    """Partition of [len(labels)] where i ~ j iff their labels agree."""
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(labels, start=1):
        groups.setdefault(int(lab), []).append(i)
    return partition_from_blocks(groups.values(), len(labels), sig)


def block_sets(M: FiniteStructure) -> list[list[int]]:
    """Blocks as sorted lists (JSON friendly)."""
    return [sorted(b) for b in blocks(M)]


# ---------------------------------------------------------------------------
# membership predicates

def _irreflexive(r) -> bool:
    return all(len(set(t)) == len(t) for t in r)


def _symmetric(r) -> bool:
    return all(p in r for t in r for p in itertools.permutations(t))


def _is_graph(M):
    r = M.relations[-1]
    return all(a != b and (b, a) in r for a, b in r)


def _is_digraph(M):
    return all(a != b for a, b in M.relations[0])


def _is_tournament(M):
    r = M.relations[0]
    if not all(a != b for a, b in r):
        return False
    for a in range(1, M.n + 1):
        for b in range(a + 1, M.n + 1):
            if ((a, b) in r) == ((b, a) in r):
                return False
    return True


def _is_partition(M):
    r = M.relations[0]
    if any((i, i) not in r for i in range(1, M.n + 1)):
        return False
    if any((b, a) not in r for a, b in r):
        return False
    succ: dict[int, set[int]] = {}
    for a, b in r:
        succ.setdefault(a, set()).add(b)
    return all(succ[b] <= succ[a] for a, b in r)


def _is_partition2(M):
    return _is_partition(M) and len(blocks(M)) <= 2


def _is_linear_order(M):
    r = M.relations[0]
    if not _is_tournament(M):
        return False
    succ: dict[int, set[int]] = {}
    for a, b in r:
        succ.setdefault(a, set()).add(b)
    return all(succ.get(b, set()) <= succ[a] for a, b in r)


def _is_singleton_or_empty(M):
    return len(M.relations[0]) <= 1


def _always(M):
    return True


def _make_hypergraph_member(r: int):
    def member(M):
        rel = M.relations[0]
        return _irreflexive(rel) and _symmetric(rel)
    return member


def _make_kcoloring_member(k: int):
    def member(M):
        for i in range(1, M.n + 1):
            if sum((i,) in rel for rel in M.relations) != 1:
                return False
        return True
    return member


# ---------------------------------------------------------------------------
# enumerators (any order; FiniteClass sorts them)

def _subsets(items):
    items = list(items)
    for mask in range(1 << len(items)):
        yield [items[i] for i in range(len(items)) if mask >> i & 1]


def _enum_sets(n, sig):
    for sub in _subsets(range(1, n + 1)):
        yield FiniteStructure(sig, n, [frozenset((i,) for i in sub)], validate=False)


def _enum_free_unary(n, sig):
    for choice in itertools.product(*[list(_subsets(range(1, n + 1))) for _ in sig.relations]):
        yield FiniteStructure(sig, n, [frozenset((i,) for i in c) for c in choice], validate=False)


def _enum_kcolorings(n, sig):
    k = len(sig)
    for colors in itertools.product(range(k), repeat=n):
        rels = [frozenset((i + 1,) for i, c in enumerate(colors) if c == j) for j in range(k)]
        yield FiniteStructure(sig, n, rels, validate=False)


def _graph_rel(edges):
    return frozenset(itertools.chain.from_iterable(((a, b), (b, a)) for a, b in edges))


def _enum_graphs(n, sig):
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    for sub in _subsets(pairs):
        yield FiniteStructure(sig, n, [_graph_rel(sub)], validate=False)


def _enum_digraphs(n, sig):
    pairs = [(a, b) for a in range(1, n + 1) for b in range(1, n + 1) if a != b]
    for sub in _subsets(pairs):
        yield FiniteStructure(sig, n, [frozenset(sub)], validate=False)


def _enum_tournaments(n, sig):
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        rel = frozenset((a, b) if bit == 0 else (b, a) for (a, b), bit in zip(pairs, bits))
        yield FiniteStructure(sig, n, [rel], validate=False)


def _restricted_growth(n, max_blocks=None):
    if n == 0:
        yield ()
        return

    def rec(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        limit = top + 1 if max_blocks is None else min(top + 1, max_blocks - 1)
        for lab in range(limit + 1):
            yield from rec(prefix + [lab], max(top, lab))

    yield from rec([0], 0)


def _enum_partitions(n, sig):
    for labels in _restricted_growth(n):
        yield partition_from_labels(labels, sig)


def _enum_partitions2(n, sig):
    for labels in _restricted_growth(n, 2):
        yield partition_from_labels(labels, sig)


def _enum_linear_orders(n, sig):
    for perm in itertools.permutations(range(1, n + 1)):
        rank = {v: i for i, v in enumerate(perm)}
        rel = frozenset((a, b) for a in perm for b in perm if rank[a] < rank[b])
        yield FiniteStructure(sig, n, [rel], validate=False)


def _enum_singleton_or_empty(n, sig):
    yield FiniteStructure(sig, n, [frozenset()], validate=False)
    for i in range(1, n + 1):
        yield FiniteStructure(sig, n, [frozenset({(i,)})], validate=False)


def _make_hypergraph_enum(r):
    def enum(n, sig):
        edges = list(itertools.combinations(range(1, n + 1), r))
        for sub in _subsets(edges):
            rel = frozenset(p for e in sub for p in itertools.permutations(e))
            yield FiniteStructure(sig, n, [rel], validate=False)
    return enum


def _enum_colored_graphs(n, sig):
    for colors in _subsets(range(1, n + 1)):
        p = frozenset((i,) for i in colors)
        for g in _enum_graphs(n, BINARY_SIG):
            yield FiniteStructure(sig, n, [p, g.relations[0]], validate=False)


def _enum_generic(member, sig, n):
    slots = [(j, t) for j, ar in enumerate(sig.arities)
             for t in itertools.product(range(1, n + 1), repeat=ar)]
    if len(slots) > _GENERIC_TUPLE_LIMIT:
        raise CapacityError(f"generic enumeration over {len(slots)} tuple slots is too large")
    for sub in _subsets(slots):
        rels = [set() for _ in sig.relations]
        for j, t in sub:
            rels[j].add(t)
        M = FiniteStructure(sig, n, [frozenset(r) for r in rels], validate=False)
        if member(M):
            yield M


# ---------------------------------------------------------------------------
# limit samplers: coordinate randomness hashed from (seed, coordinates)

def _unary_bits(seed, stream, n, p=0.5):
    if n == 0:
        return np.zeros(0, dtype=bool)
    return hash_uniform(seed, stream, np.arange(1, n + 1)) < p


def _pairs(n):
    if n < 2:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    a, b = np.triu_indices(n, k=1)
    return a + 1, b + 1


def _sample_sets(n, seed, sig):
    bits = _unary_bits(seed, "set", n)
    return FiniteStructure(sig, n, [frozenset((int(i),) for i in np.flatnonzero(bits) + 1)], validate=False)


def _sample_colorings(n, seed, sig):
    rels = [frozenset((int(i),) for i in np.flatnonzero(_unary_bits(seed, f"color:{name}", n)) + 1)
            for name in sig.names]
    return FiniteStructure(sig, n, rels, validate=False)


def _sample_kcolorings(n, seed, sig):
    k = len(sig)
    u = hash_uniform(seed, "kcolor", np.arange(1, n + 1)) if n else np.zeros(0)
    colors = np.minimum((u * k).astype(int), k - 1)
    rels = [frozenset((i + 1,) for i in range(n) if colors[i] == j) for j in range(k)]
    return FiniteStructure(sig, n, rels, validate=False)


def _er_edges(n, seed, stream="edge"):
    a, b = _pairs(n)
    keep = hash_uniform(seed, stream, a, b) < 0.5
    return list(zip(a[keep].tolist(), b[keep].tolist()))


def _sample_graphs(n, seed, sig):
    return FiniteStructure(sig, n, [_graph_rel(_er_edges(n, seed))], validate=False)


def _sample_digraphs(n, seed, sig):
    if n < 2:
        return FiniteStructure.empty(sig, n)
    a, b = np.nonzero(~np.eye(n, dtype=bool))
    keep = hash_uniform(seed, "arc", a + 1, b + 1) < 0.5
    return FiniteStructure(sig, n, [frozenset(zip((a[keep] + 1).tolist(), (b[keep] + 1).tolist()))],
                           validate=False)


def _sample_tournaments(n, seed, sig):
    a, b = _pairs(n)
    fwd = hash_uniform(seed, "orient", a, b) < 0.5
    rel = [(x, y) if f else (y, x) for x, y, f in zip(a.tolist(), b.tolist(), fwd.tolist())]
    return FiniteStructure(sig, n, [frozenset(rel)], validate=False)


def _geometric_labels(n, seed):
    if n == 0:
        return []
    u = hash_uniform(seed, "block", np.arange(1, n + 1))
    # Geometric(1/2) on {1,2,...}: P(label = k) = 2^-k
    u = np.maximum(u, 1e-300)
    return (np.floor(-np.log2(u)).astype(int) + 1).tolist()


def _sample_partitions(n, seed, sig):
    return partition_from_labels(_geometric_labels(n, seed), sig)


def _sample_partitions2(n, seed, sig):
    return partition_from_labels(_unary_bits(seed, "half", n).astype(int).tolist(), sig)


def _sample_linear_orders(n, seed, sig):
    u = hash_uniform(seed, "rank", np.arange(1, n + 1)) if n else np.zeros(0)
    order = [int(i) + 1 for i in np.argsort(u, kind="stable")]
    rank = {v: i for i, v in enumerate(order)}
    rel = frozenset((a, b) for a in order for b in order if rank[a] < rank[b])
    return FiniteStructure(sig, n, [rel], validate=False)


def _make_hypergraph_sampler(r):
    def sample(n, seed, sig):
        rel = []
        for e in itertools.combinations(range(1, n + 1), r):
            if float(hash_uniform(seed, "hyperedge", *e)) < 0.5:
                rel.extend(itertools.permutations(e))
        return FiniteStructure(sig, n, [frozenset(rel)], validate=False)
    return sample


def _sample_colored_graphs(n, seed, sig):
    p = frozenset((int(i),) for i in np.flatnonzero(_unary_bits(seed, "vertex-color", n)) + 1)
    return FiniteStructure(sig, n, [p, _graph_rel(_er_edges(n, seed))], validate=False)


def _sample_all(n, seed, sig):
    rels = []
    for j, ar in enumerate(sig.arities):
        if n == 0:
            rels.append(frozenset())
            continue
        grid = np.indices((n,) * ar).reshape(ar, -1) + 1
        keep = hash_uniform(seed, f"tuple:{j}", *grid) < 0.5
        rels.append(frozenset(map(tuple, grid[:, keep].T.tolist())))
    return FiniteStructure(sig, n, rels, validate=False)


# ---------------------------------------------------------------------------
# extension to a larger domain (used by kernel conjugation)

def _extend_empty(M, N):
    return FiniteStructure(M.sig, N, M.relations, validate=False)


def _extend_partition(M, N):
    rel = M.relations[0] | {(i, i) for i in range(M.n + 1, N + 1)}
    return FiniteStructure(M.sig, N, [rel], validate=False)


def _extend_partition2(M, N):
    rel = set(M.relations[0])
    first = sorted(blocks(M)[0]) if M.n else []
    new = list(range(M.n + 1, N + 1))
    block = first + new
    rel.update((a, b) for a in block for b in block)
    return FiniteStructure(M.sig, N, [frozenset(rel)], validate=False)


def _extend_upward(M, N):
    # new elements sit above everything, in increasing order (tournaments, orders)
    rel = set(M.relations[0])
    rel.update((a, b) for b in range(M.n + 1, N + 1) for a in range(1, b))
    return FiniteStructure(M.sig, N, [frozenset(rel)], validate=False)


def _extend_kcoloring(M, N):
    rels = list(M.relations)
    rels[0] = rels[0] | {(i,) for i in range(M.n + 1, N + 1)}
    return FiniteStructure(M.sig, N, rels, validate=False)


def _count_tuples(sig, n):
    return sum(n ** ar for ar in sig.arities)


class FiniteClass:
    """A class of finite structures closed under isomorphism.

    ``member`` decides membership; ``enumerator(n, sig)`` optionally yields
    X_[n] quickly; ``limit_sampler(n, seed, sig)`` draws the restriction of
    an exchangeable limit; ``hereditary`` lets searches prune on prefixes.
    """

    def __init__(self, sig: Signature, member: Callable[[FiniteStructure], bool], *,
                 id: str | None = None, enum_bound: int = 5,
                 enumerator: Callable | None = None,
                 limit_sampler: Callable | None = None,
                 extender: Callable | None = None,
                 counter: Callable[[int], int] | None = None,
                 hereditary: bool | None = None):
        self.sig = sig
        self.member = member
        self.id = id
        self.enum_bound = enum_bound
        self._enumerator = enumerator
        self.limit_sampler = limit_sampler
        self._extender = extender
        self._counter = counter
        self.hereditary = hereditary
        self._cache: dict[int, tuple[FiniteStructure, ...]] = {}

    def __repr__(self) -> str:
        return f"FiniteClass({self.id or 'custom'}, sig={list(self.sig.relations)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteClass):
            return NotImplemented
        if self is other:
            return True
        return self.id is not None and self.id == other.id and self.sig == other.sig

    def __hash__(self) -> int:
        return hash((self.id, self.sig)) if self.id is not None else id(self)

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_cache"] = {}
        return state

    def contains(self, M: FiniteStructure) -> bool:
        return M.sig == self.sig and bool(self.member(M))

    __contains__ = contains

    def enumerate(self, n: int) -> tuple[FiniteStructure, ...]:
        """All members on [n], sorted by :attr:`FiniteStructure.sort_key`."""
        if n > self.enum_bound:
            raise CapacityError(f"n={n} exceeds the enumeration bound {self.enum_bound} of {self!r}")
        if n not in self._cache:
            if self._enumerator is not None:
                items = self._enumerator(n, self.sig)
            else:
                items = _enum_generic(self.member, self.sig, n)
            self._cache[n] = tuple(sorted(set(items), key=lambda M: M.sort_key))
        return self._cache[n]

    def count(self, n: int) -> int | None:
        """|X_[n]| when cheaply known, else None."""
        if self._counter is not None:
            return self._counter(n)
        if n in self._cache:
            return len(self._cache[n])
        return None

    def tabulable(self, n: int, limit: int = 10_000) -> bool:
        """Whether X_[n] can be enumerated within ``limit`` members."""
        if n > self.enum_bound:
            return False
        c = self.count(n)
        if c is not None:
            return c <= limit
        return _count_tuples(self.sig, n) <= min(_GENERIC_TUPLE_LIMIT, int(math.log2(limit)) + 1)

    def random_member(self, n: int, rng: np.random.Generator) -> FiniteStructure:
        """A random member on [n] with full support (not necessarily uniform)."""
        if self.limit_sampler is not None:
            return self.limit_sampler(n, int(rng.integers(0, 2 ** 63)), self.sig)
        if self.tabulable(n, 100_000):
            members = self.enumerate(n)
            return members[int(rng.integers(len(members)))]
        for _ in range(10_000):
            M = _sample_all(n, int(rng.integers(0, 2 ** 63)), self.sig)
            if self.contains(M):
                return M
        raise CapacityError(f"could not draw a random member of {self!r} on [{n}]")

    def extend(self, M: FiniteStructure, N: int) -> FiniteStructure:
        """A member on [N] whose restriction to [M.n] is M."""
        if N < M.n:
            raise MalformedInputError(f"cannot extend a structure on [{M.n}] to [{N}]")
        if N == M.n:
            return M
        if self._extender is not None:
            return self._extender(M, N)
        plain = _extend_empty(M, N)
        if self.contains(plain):
            return plain
        free = [(j, t) for j, ar in enumerate(self.sig.arities)
                for t in itertools.product(range(1, N + 1), repeat=ar) if max(t) > M.n]
        found = _complete(self, N, [set(r) for r in M.relations], free, prune=bool(self.hereditary))
        if found is None:
            raise NotFoundError(f"{self!r} has no extension of the given structure to [{N}]")
        return found

    # convenience constructors
    @classmethod
    def from_predicate(cls, sig: Signature, member: Callable[[FiniteStructure], bool], *,
                       enum_bound: int = 4, id: str | None = None,
                       hereditary: bool | None = None) -> "FiniteClass":
        return cls(sig, member, id=id, enum_bound=enum_bound, hereditary=hereditary)

    @classmethod
    def from_members(cls, members: Iterable[FiniteStructure], *, id: str | None = None) -> "FiniteClass":
        """Class generated by explicit members, closed under isomorphism."""
        members = list(members)
        if not members:
            raise MalformedInputError("a class needs at least one member")
        sig = members[0].sig
        closure: dict[int, set[FiniteStructure]] = {}
        for M in members:
            if M.sig != sig:
                raise MalformedInputError("class members use different signatures")
            bucket = closure.setdefault(M.n, set())
            for perm in itertools.permutations(range(1, M.n + 1)):
                bucket.add(apply_injection(M, Injection(perm, M.n)))
        frozen = {n: frozenset(b) for n, b in closure.items()}
        bound = max(frozen)

        def member(M):
            return M in frozen.get(M.n, ())

        def enum(n, _sig):
            return frozen.get(n, ())

        return cls(sig, member, id=id, enum_bound=bound, enumerator=enum,
                   counter=lambda n: len(frozen.get(n, ())), hereditary=None)


# ---------------------------------------------------------------------------
# builtin registry

def _bell(n):
    row = [1]
    for _ in range(n):
        new = [row[-1]]
        for v in row:
            new.append(new[-1] + v)
        row = new
    return row[0]


def _hypergraph_class(r: int, enum_bound: int) -> FiniteClass:
    return FiniteClass(Signature.of(("R", r)), _make_hypergraph_member(r), id=f"hypergraphs{r}",
                       enum_bound=enum_bound, enumerator=_make_hypergraph_enum(r),
                       limit_sampler=_make_hypergraph_sampler(r), extender=_extend_empty,
                       counter=lambda n: 2 ** math.comb(n, r), hereditary=True)


def _kcolor_class(k: int, enum_bound: int) -> FiniteClass:
    sig = Signature(tuple((f"R{i}", 1) for i in range(1, k + 1)))
    return FiniteClass(sig, _make_kcoloring_member(k), id=f"kcolorings{k}", enum_bound=enum_bound,
                       enumerator=_enum_kcolorings, limit_sampler=_sample_kcolorings,
                       extender=_extend_kcoloring, counter=lambda n: k ** n, hereditary=True)


def _all_class(sig: Signature, id: str, enum_bound: int) -> FiniteClass:
    def count(n):
        return 2 ** _count_tuples(sig, n)
    return FiniteClass(sig, _always, id=id, enum_bound=enum_bound, limit_sampler=_sample_all,
                       extender=_extend_empty, counter=count, hereditary=True)


_BUILTINS: dict[str, Callable[[int], FiniteClass]] = {
    "sets": lambda b: FiniteClass(SET_SIG, _always, id="sets", enum_bound=b, enumerator=_enum_sets,
                                  limit_sampler=_sample_sets, extender=_extend_empty,
                                  counter=lambda n: 2 ** n, hereditary=True),
    "colorings": lambda b: FiniteClass(COLOR_SIG, _always, id="colorings", enum_bound=b,
                                       enumerator=_enum_free_unary, limit_sampler=_sample_colorings,
                                       extender=_extend_empty, counter=lambda n: 4 ** n, hereditary=True),
    "graphs": lambda b: FiniteClass(BINARY_SIG, _is_graph, id="graphs", enum_bound=b,
                                    enumerator=_enum_graphs, limit_sampler=_sample_graphs,
                                    extender=_extend_empty, counter=lambda n: 2 ** math.comb(n, 2),
                                    hereditary=True),
    "digraphs": lambda b: FiniteClass(BINARY_SIG, _is_digraph, id="digraphs", enum_bound=b,
                                      enumerator=_enum_digraphs, limit_sampler=_sample_digraphs,
                                      extender=_extend_empty, counter=lambda n: 2 ** (n * (n - 1)),
                                      hereditary=True),
    "tournaments": lambda b: FiniteClass(BINARY_SIG, _is_tournament, id="tournaments", enum_bound=b,
                                         enumerator=_enum_tournaments, limit_sampler=_sample_tournaments,
                                         extender=_extend_upward, counter=lambda n: 2 ** math.comb(n, 2),
                                         hereditary=True),
    "partitions": lambda b: FiniteClass(BINARY_SIG, _is_partition, id="partitions", enum_bound=b,
                                        enumerator=_enum_partitions, limit_sampler=_sample_partitions,
                                        extender=_extend_partition, counter=_bell, hereditary=True),
    "partitions2": lambda b: FiniteClass(BINARY_SIG, _is_partition2, id="partitions2", enum_bound=b,
                                         enumerator=_enum_partitions2, limit_sampler=_sample_partitions2,
                                         extender=_extend_partition2,
                                         counter=lambda n: 2 ** (n - 1) if n else 1, hereditary=True),
    "colored-graphs": lambda b: FiniteClass(COLORED_GRAPH_SIG, _is_graph, id="colored-graphs",
                                            enum_bound=b, enumerator=_enum_colored_graphs,
                                            limit_sampler=_sample_colored_graphs, extender=_extend_empty,
                                            counter=lambda n: 2 ** (n + math.comb(n, 2)), hereditary=True),
    "linear-orders": lambda b: FiniteClass(BINARY_SIG, _is_linear_order, id="linear-orders", enum_bound=b,
                                           enumerator=_enum_linear_orders, limit_sampler=_sample_linear_orders,
                                           extender=_extend_upward, counter=math.factorial, hereditary=True),
    "singleton-or-empty": lambda b: FiniteClass(SET_SIG, _is_singleton_or_empty, id="singleton-or-empty",
                                                enum_bound=b, enumerator=_enum_singleton_or_empty,
                                                extender=_extend_empty, counter=lambda n: n + 1,
                                                hereditary=True),
    "ternary": lambda b: _all_class(TERNARY_SIG, "ternary", min(b, 2)),
}

_ALIASES = {
    "set": "sets", "graph": "graphs", "digraph": "digraphs", "tournament": "tournaments",
    "partition": "partitions", "partitions<=2": "partitions2", "partitions≤2": "partitions2",
    "colored_graphs": "colored-graphs", "colouredgraphs": "colored-graphs",
    "linear_orders": "linear-orders", "orders": "linear-orders", "orderings": "linear-orders",
    "singleton_or_empty": "singleton-or-empty", "hypergraphs": "hypergraphs3", "kcolorings": "kcolorings3",
}

BUILTIN_IDS = tuple(sorted(set(_BUILTINS) | {"hypergraphs3", "kcolorings3"}))


@lru_cache(maxsize=None)
def get_class(class_id: str, enum_bound: int = 5) -> FiniteClass:
    """Builtin class by id (``sets``, ``graphs``, ``partitions``, ``hypergraphs3``, ...)."""
    key = _ALIASES.get(class_id, class_id)
    if key in _BUILTINS:
        return _BUILTINS[key](enum_bound)
    if key.startswith("hypergraphs") and key[len("hypergraphs"):].isdigit():
        return _hypergraph_class(int(key[len("hypergraphs"):]), enum_bound)
    if key.startswith("kcolorings") and key[len("kcolorings"):].isdigit():
        return _kcolor_class(int(key[len("kcolorings"):]), enum_bound)
    raise UnsupportedClassError(f"unknown class id {class_id!r}")


def universal_class(sig: Signature, enum_bound: int = 3) -> FiniteClass:
    """All structures of a signature."""
    label = "all:" + ",".join(f"{name}/{ar}" for name, ar in sig.relations)
    return _all_class(sig, label, enum_bound)


def class_from_json(data) -> FiniteClass:
    """User class from ``{"members": [structure, ...]}`` or a bare list of structures."""
    items = data.get("members") if isinstance(data, dict) else data
    if isinstance(items, dict):
        items = [s for group in items.values() for s in group]
    if not isinstance(items, list):
        raise MalformedInputError("class file: expected a list of structures or {\"members\": [...]}")
    return FiniteClass.from_members([FiniteStructure.from_dict(s) for s in items],
                                    id=data.get("id") if isinstance(data, dict) else None)


def load_class(spec: str, enum_bound: int = 5) -> FiniteClass:
    """Builtin id or path to a JSON class file."""
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        try:
            return class_from_json(json.loads(path.read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedInputError(f"class file {spec}: {exc}") from exc
    return get_class(spec, enum_bound)


def enumerate_class(K: FiniteClass, n: int) -> list[FiniteStructure]:
    """Every member of X_[n], duplicate-free, in canonical order."""
    return list(K.enumerate(n))


# ---------------------------------------------------------------------------
# completion search shared by JEP, DAP and generic extension

def _complete(K: FiniteClass, n: int, forced: list[set], free: list[tuple[int, tuple]],
              prune: bool) -> FiniteStructure | None:
    """Find a member on [n] containing ``forced`` and any subset of ``free``.

    Free tuples are decided in order of their largest coordinate; with
    ``prune`` every completed prefix [k] must already be a member.
    """
    order = sorted(free, key=lambda jt: (max(jt[1]), jt[0], jt[1]))
    chosen = [set(f) for f in forced]
    sig = K.sig

    def prefix(k):
        return FiniteStructure(sig, k, [frozenset(t for t in c if max(t) <= k) for c in chosen],
                               validate=False)

    def dfs(idx):
        if idx == len(order):
            U = FiniteStructure(sig, n, [frozenset(c) for c in chosen], validate=False)
            return U if K.contains(U) else None
        j, t = order[idx]
        k = max(t)
        if prune and (idx == 0 or max(order[idx - 1][1]) < k) and k > 1:
            if not K.contains(prefix(k - 1)):
                return None
        for present in (False, True):
            if present:
                chosen[j].add(t)
            found = dfs(idx + 1)
            if present:
                chosen[j].discard(t)
            if found is not None:
                return found
        return None

    return dfs(0)


def _tuples_over(sig: Signature, n: int) -> Iterator[tuple[int, tuple]]:
    for j, ar in enumerate(sig.arities):
        for t in itertools.product(range(1, n + 1), repeat=ar):
            yield j, t


def _amalgam(K: FiniteClass, u: int, parts: list[tuple[FiniteStructure, Injection]]) -> FiniteStructure | None:
    """Member U on [u] with ``U^ψ = P`` for each (P, ψ), or None.

    Callers guarantee that the images of the parts cover [u] and that the
    parts agree wherever their images overlap.
    """
    forced = [set() for _ in K.sig.relations]
    images = [frozenset(psi.map) for _, psi in parts]
    for P, psi in parts:
        for j, r in enumerate(P.relations):
            forced[j].update(tuple(psi.map[c - 1] for c in t) for t in r)
    free = [(j, t) for j, t in _tuples_over(K.sig, u)
            if not any(img.issuperset(t) for img in images)]
    return _complete(K, u, forced, free, prune=bool(K.hereditary))


def _members_up_to(K: FiniteClass, n_max: int) -> list[FiniteStructure]:
    out = []
    for n in range(0, n_max + 1):
        out.extend(K.enumerate(n))
    return out


# ---------------------------------------------------------------------------
# property checkers

def check_hp(K: FiniteClass, n_max: int) -> Verdict:
    """Every member of size <= n_max has all its injection images in K."""
    checked: dict[FiniteStructure, bool] = {}
    for n in range(1, n_max + 1):
        for M in K.enumerate(n):
            for m in range(0, n):
                for img in itertools.permutations(range(1, n + 1), m):
                    phi = Injection(img, n)
                    sub = apply_injection(M, phi)
                    ok = checked.get(sub)
                    if ok is None:
                        ok = checked[sub] = K.contains(sub)
                    if not ok:
                        return Verdict(FAIL, {"structure": M.to_dict(), "injection": phi.to_json(),
                                              "substructure": sub.to_dict()})
    return Verdict(PASS, details={"n_max": n_max})


def _overlap_placements(a: int, b: int, u: int) -> Iterator[Injection]:
    """Injections ψ: [b] -> [u] with [a] ∪ im ψ = [u]; new points in increasing order."""
    shared = a + b - u
    for overlap in itertools.combinations(range(1, b + 1), shared):
        for targets in itertools.permutations(range(1, a + 1), shared):
            img = [0] * b
            for src, tgt in zip(overlap, targets):
                img[src - 1] = tgt
            nxt = a + 1
            for i in range(b):
                if img[i] == 0:
                    img[i] = nxt
                    nxt += 1
            yield Injection(tuple(img), u)


def _consistent_on_overlap(S: FiniteStructure, T: FiniteStructure, psi: Injection, a: int) -> bool:
    overlap = [i for i in range(1, T.n + 1) if psi(i) <= a]
    if not overlap:
        return True
    sub_T = apply_injection(T, Injection(tuple(overlap), T.n))
    sub_S = apply_injection(S, Injection(tuple(psi(i) for i in overlap), S.n))
    return sub_T == sub_S


def check_jep(K: FiniteClass, n_max: int, search_bound: int) -> Verdict:
    """Bounded joint-embedding search over all member pairs of size <= n_max."""
    members = _members_up_to(K, n_max)
    exact = bool(K.hereditary)
    for S in members:
        for T in members:
            if T.sort_key < S.sort_key:
                continue  # the search is symmetric in the pair
            a, b = S.n, T.n
            found = None
            top = min(a + b, search_bound)
            for u in range(top, max(a, b) - 1, -1):
                for psi in _overlap_placements(a, b, u):
                    if not _consistent_on_overlap(S, T, psi, a):
                        continue
                    found = _amalgam(K, u, [(S, Injection.inclusion(a, u)), (T, psi)])
                    if found is not None:
                        break
                if found is not None:
                    break
            if found is None:
                pair = {"S": S.to_dict(), "T": T.to_dict()}
                if exact and a + b <= search_bound:
                    return Verdict(FAIL, pair, {"n_max": n_max, "search_bound": search_bound})
                return Verdict(UNKNOWN, pair, {"n_max": n_max, "search_bound": search_bound})
    return Verdict(PASS, details={"n_max": n_max, "search_bound": search_bound})


def check_dap(K: FiniteClass, n_max: int, search_bound: int | None = None) -> Verdict:
    """Disjoint amalgamation over triples with |T|, |T'| <= n_max.

    Up to isomorphism the embeddings of S are prefix inclusions, so the
    triples are pairs (T, T') sharing the prefix S = T|[s] = T'|[s]. The
    amalgam is sought at the canonical size |T| + |T'| - |S|.
    """
    if search_bound is None:
        search_bound = 2 * n_max
    members = _members_up_to(K, n_max)
    undecided = None
    for T in members:
        for T2 in members:
            for s in range(0, min(T.n, T2.n) + 1):
                S = restrict(T, s)
                if restrict(T2, s) != S or not K.contains(S):
                    continue
                t, t2 = T.n, T2.n
                u = t + t2 - s
                psi2 = Injection(tuple(range(1, s + 1)) + tuple(range(t + 1, u + 1)), u)
                witness = {"S": S.to_dict(), "T": T.to_dict(), "T2": T2.to_dict(),
                           "phi": list(range(1, s + 1)), "phi2": list(range(1, s + 1))}
                if u > search_bound:
                    undecided = undecided or witness
                    continue
                U = _amalgam(K, u, [(T, Injection.inclusion(t, u)), (T2, psi2)])
                if U is None:
                    if K.hereditary:
                        return Verdict(FAIL, witness, {"n_max": n_max, "amalgam_size": u})
                    undecided = undecided or witness
    if undecided is not None:
        return Verdict(UNKNOWN, undecided, {"n_max": n_max, "search_bound": search_bound})
    return Verdict(PASS, details={"n_max": n_max, "search_bound": search_bound})


def face(M: FiniteStructure, i: int) -> FiniteStructure:
    """Restriction of M to [n] minus {i}, relabelled onto [n-1] in order."""
    keep = tuple(v for v in range(1, M.n + 1) if v != i)
    return apply_injection(M, Injection(keep, M.n))


def check_ndap(K: FiniteClass, n: int) -> Verdict:
    """n-ary disjoint amalgamation, decided exactly.

    Families (S_1..S_n) with S_i a member on [n] minus {i} (relabelled onto
    [n-1]) are enumerated in canonical order; a family is compatible when
    S_i and S_j agree on [n] minus {i, j}. The first compatible family with
    no member on [n] having those faces is the witness.
    """
    if n < 2:
        raise MalformedInputError("n-DAP needs n >= 2")
    lower = K.enumerate(n - 1)
    achievable = {tuple(face(U, i) for i in range(1, n + 1)) for U in K.enumerate(n)}
    # faces of S_i inside the overlap with S_j: for j > i drop position j-1, for j < i drop j
    face_cache: dict[tuple[int, int], FiniteStructure] = {}

    def sub(idx: int, pos: int) -> FiniteStructure:
        key = (idx, pos)
        if key not in face_cache:
            face_cache[key] = face(lower[idx], pos)
        return face_cache[key]

    chosen: list[int] = []

    def search(i: int):
        if i > n:
            family = tuple(lower[k] for k in chosen)
            return None if family in achievable else family
        for idx in range(len(lower)):
            ok = True
            for j, jdx in enumerate(chosen, start=1):
                # S_j (j < i) drops i-1; S_i drops j
                if sub(jdx, i - 1) != sub(idx, j):
                    ok = False
                    break
            if not ok:
                continue
            chosen.append(idx)
            bad = search(i + 1)
            chosen.pop()
            if bad is not None:
                return bad
        return None

    bad = search(1)
    if bad is None:
        return Verdict(PASS, details={"n": n})
    domains = [[v for v in range(1, n + 1) if v != i] for i in range(1, n + 1)]
    return Verdict(FAIL, {"family": [S.to_dict() for S in bad], "domains": domains}, {"n": n})


# ---------------------------------------------------------------------------
# limit samplers and the canonical embedding

def sample_limit(K: FiniteClass | str, n: int, seed: int) -> FiniteStructure:
    """Restriction to [n] of an exchangeable limit; projective in n for fixed seed."""
    if isinstance(K, str):
        K = get_class(K)
    if K.limit_sampler is None:
        raise UnsupportedClassError(f"no limit sampler for {K!r}")
    if n < 0:
        raise MalformedInputError("n must be nonnegative")
    return K.limit_sampler(n, int(seed), K.sig)


def canonical_embedding(S: FiniteStructure, Mtrunc: FiniteStructure) -> Injection:
    """Greedy minimal increasing injection ρ with ``Mtrunc^ρ = S``.

    ρ(1) is the least position matching S|[1]; each later ρ(k+1) is the
    least position above ρ(k) that keeps the partial map an embedding.
    """
    if S.sig != Mtrunc.sig:
        raise MalformedInputError("structures have different signatures")
    N = Mtrunc.n
    arities = S.sig.arities
    rho: list[int] = []
    for k in range(1, S.n + 1):
        start = rho[-1] + 1 if rho else 1
        for p in range(start, N + 1):
            rho.append(p)
            if all((t in sr) == (tuple(rho[c - 1] for c in t) in mr)
                   for ar, sr, mr in zip(arities, S.relations, Mtrunc.relations)
                   for t in _tuples_with_last(k, ar)):
                break
            rho.pop()
        else:
            raise NotFoundError(f"no embedding of the first {k} elements within [{N}] (have {rho})")
    return Injection(tuple(rho), N)


def isomorphism_types(K: FiniteClass, n: int) -> list[FiniteStructure]:
    """One canonical representative per isomorphism type in X_[n]."""
    return sorted({canonical_form(M) for M in K.enumerate(n)}, key=lambda M: M.sort_key)
