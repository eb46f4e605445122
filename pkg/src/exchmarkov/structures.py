"""Finite relational structures over initial segments [n] = {1, ..., n}.

Structures are immutable. Relations are stored as frozensets of 1-indexed
tuples, one per relation symbol, in signature order. Undirected relations
store every orientation, so equality is purely structural.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import MalformedInputError

Tuple = tuple[int, ...]


@dataclass(frozen=True)
class Signature:
    """Ordered list of ``(name, arity)`` relation symbols."""

    relations: tuple[tuple[str, int], ...]

    def __post_init__(self):
        rels = tuple((str(name), int(ar)) for name, ar in self.relations)
        object.__setattr__(self, "relations", rels)
        if not rels:
            raise MalformedInputError("signature must contain at least one relation")
        names = [name for name, _ in rels]
        if len(set(names)) != len(names):
            raise MalformedInputError(f"duplicate relation names in signature: {names}")
        for name, ar in rels:
            if not name.isidentifier():
                raise MalformedInputError(f"relation name {name!r} is not an identifier")
            if ar < 1:
                raise MalformedInputError(f"relation {name!r} has arity {ar} < 1")

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "Signature":
        return cls(tuple(pairs))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.relations)

    @property
    def arities(self) -> tuple[int, ...]:
        return tuple(ar for _, ar in self.relations)

    @property
    def max_arity(self) -> int:
        return max(self.arities)

    def __len__(self) -> int:
        return len(self.relations)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise MalformedInputError(f"unknown relation {name!r}") from None

    def to_json(self) -> list[dict]:
        return [{"name": name, "arity": ar} for name, ar in self.relations]

    @classmethod
    def from_json(cls, data) -> "Signature":
        if not isinstance(data, list):
            raise MalformedInputError("signature: expected a list of {name, arity} objects")
        pairs = []
        for k, entry in enumerate(data):
            if not isinstance(entry, Mapping) or "name" not in entry or "arity" not in entry:
                raise MalformedInputError(f"signature[{k}]: expected an object with name and arity")
            arity = entry["arity"]
            if not isinstance(arity, int) or isinstance(arity, bool):
                raise MalformedInputError(f"signature[{k}].arity: expected a positive integer")
            pairs.append((entry["name"], arity))
        return cls(tuple(pairs))


class FiniteStructure:
    """A structure over [n] for a fixed signature.

    ``relations`` may be a mapping from relation name to tuples or a
    sequence aligned with the signature. Pass ``validate=False`` only for
    tuples already known to be in range (internal fast paths).
    """

    __slots__ = ("sig", "n", "relations", "_hash", "_key")

    def __init__(self, sig: Signature, n: int, relations=None, *, validate: bool = True):
        if relations is None:
            rels = tuple(frozenset() for _ in sig.relations)
        elif isinstance(relations, Mapping):
            unknown = set(relations) - set(sig.names)
            if unknown:
                raise MalformedInputError(f"unknown relation(s) {sorted(unknown)}")
            rels = tuple(
                frozenset(tuple(int(c) for c in t) for t in relations.get(name, ()))
                if validate else frozenset(relations.get(name, ()))
                for name in sig.names
            )
        else:
            rels = tuple(relations)
            if len(rels) != len(sig):
                raise MalformedInputError("relation count does not match the signature")
            if validate:
                rels = tuple(frozenset(tuple(int(c) for c in t) for t in r) for r in rels)
            else:
                rels = tuple(r if isinstance(r, frozenset) else frozenset(r) for r in rels)
        if validate:
            if not isinstance(n, int) or n < 0:
                raise MalformedInputError(f"domain size must be a nonnegative integer, got {n!r}")
            for (name, ar), tuples in zip(sig.relations, rels):
                for t in tuples:
                    if len(t) != ar:
                        raise MalformedInputError(
                            f"relation {name}: tuple {list(t)} has length {len(t)}, arity is {ar}")
                    for c in t:
                        if not 1 <= c <= n:
                            raise MalformedInputError(
                                f"relation {name}: tuple {list(t)} has coordinate {c} outside [1,{n}]")
        self.sig = sig
        self.n = n
        self.relations = rels
        self._hash = None
        self._key = None

    # -- identity -------------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteStructure):
            return NotImplemented
        return self.n == other.n and self.relations == other.relations and self.sig == other.sig

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.sig, self.n, self.relations))
        return self._hash

    @property
    def sort_key(self):
        """Total order used for deterministic enumeration: fewer tuples first."""
        if self._key is None:
            sorted_rels = tuple(tuple(sorted(r)) for r in self.relations)
            self._key = (self.n, sum(len(r) for r in self.relations), sorted_rels)
        return self._key

    def __lt__(self, other: "FiniteStructure") -> bool:
        return self.sort_key < other.sort_key

    def __repr__(self) -> str:
        parts = ", ".join(f"{name}={sorted(r)}" for name, r in zip(self.sig.names, self.relations))
        return f"FiniteStructure(n={self.n}, {parts})"

    # -- access ---------------------------------------------------------
    def rel(self, which: int | str) -> frozenset:
        """Tuples of a relation, by name or 0-based position."""
        if isinstance(which, str):
            which = self.sig.index(which)
        return self.relations[which]

    def holds(self, which: int | str, t: Sequence[int]) -> bool:
        return tuple(t) in self.rel(which)

    @property
    def size(self) -> int:
        return sum(len(r) for r in self.relations)

    @classmethod
    def empty(cls, sig: Signature, n: int) -> "FiniteStructure":
        return cls(sig, n, None, validate=False)

    def replace(self, which: int | str, tuples: Iterable[Tuple]) -> "FiniteStructure":
        if isinstance(which, str):
            which = self.sig.index(which)
        rels = list(self.relations)
        rels[which] = frozenset(tuples)
        return FiniteStructure(self.sig, self.n, rels, validate=False)

    # -- serialisation --------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "signature": self.sig.to_json(),
            "n": self.n,
            "relations": {name: [list(t) for t in sorted(r)]
                          for name, r in zip(self.sig.names, self.relations)},
        }

    @classmethod
    def from_dict(cls, data) -> "FiniteStructure":
        """Parse the JSON structure format, rejecting malformed tuples."""
        if not isinstance(data, Mapping):
            raise MalformedInputError("structure: expected a JSON object")
        for field in ("signature", "n", "relations"):
            if field not in data:
                raise MalformedInputError(f"structure: missing field {field!r}")
        sig = Signature.from_json(data["signature"])
        n = data["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise MalformedInputError(f"structure.n: expected a nonnegative integer, got {n!r}")
        rels_in = data["relations"]
        if not isinstance(rels_in, Mapping):
            raise MalformedInputError("structure.relations: expected an object keyed by relation name")
        rels: dict[str, list[Tuple]] = {}
        for name, tuples in rels_in.items():
            if name not in sig.names:
                raise MalformedInputError(f"relations.{name}: relation not in signature")
            arity = sig.arities[sig.index(name)]
            if not isinstance(tuples, list):
                raise MalformedInputError(f"relations.{name}: expected a list of tuples")
            seen: set[Tuple] = set()
            for raw in tuples:
                if not isinstance(raw, list) or not all(
                        isinstance(c, int) and not isinstance(c, bool) for c in raw):
                    raise MalformedInputError(f"relations.{name}: tuple {raw!r} is not a list of integers")
                if len(raw) != arity:
                    raise MalformedInputError(
                        f"relations.{name}: tuple {raw} has length {len(raw)}, arity is {arity}")
                for c in raw:
                    if not 1 <= c <= n:
                        raise MalformedInputError(
                            f"relations.{name}: tuple {raw} has coordinate {c} outside [1,{n}]")
                t = tuple(raw)
                if t in seen:
                    raise MalformedInputError(f"relations.{name}: duplicate tuple {raw}")
                seen.add(t)
            rels[name] = sorted(seen)
        return cls(sig, n, rels, validate=False)


@dataclass(frozen=True)
class Injection:
    """Injective map [m] -> [n] given by its image list ``map``."""

    map: tuple[int, ...]
    n: int

    def __post_init__(self):
        object.__setattr__(self, "map", tuple(int(v) for v in self.map))
        if len(set(self.map)) != len(self.map):
            raise MalformedInputError(f"injection {list(self.map)} is not injective")
        for v in self.map:
            if not 1 <= v <= self.n:
                raise MalformedInputError(f"injection value {v} outside [1,{self.n}]")

    @property
    def m(self) -> int:
        return len(self.map)

    def __call__(self, i: int) -> int:
        return self.map[i - 1]

    @classmethod
    def identity(cls, n: int) -> "Injection":
        return cls(tuple(range(1, n + 1)), n)

    @classmethod
    def inclusion(cls, m: int, n: int) -> "Injection":
        if m > n:
            raise MalformedInputError(f"cannot include [{m}] into [{n}]")
        return cls(tuple(range(1, m + 1)), n)

    @property
    def is_permutation(self) -> bool:
        return self.m == self.n

    def compose(self, inner: "Injection") -> "Injection":
        """``self ∘ inner``: first ``inner``, then ``self``."""
        if inner.n != self.m:
            raise MalformedInputError(f"cannot compose [{inner.m}]->[{inner.n}] with [{self.m}]->[{self.n}]")
        return Injection(tuple(self.map[v - 1] for v in inner.map), self.n)

    def inverse(self) -> "Injection":
        if not self.is_permutation:
            raise MalformedInputError("only permutations are invertible")
        inv = [0] * self.n
        for i, v in enumerate(self.map, start=1):
            inv[v - 1] = i
        return Injection(tuple(inv), self.n)

    def extend(self, size: int) -> "Injection":
        """Extend a permutation of [n] to [size] by fixing n+1..size."""
        if not self.is_permutation:
            raise MalformedInputError("only permutations can be extended by the identity")
        if size < self.n:
            raise MalformedInputError(f"cannot extend a permutation of [{self.n}] to [{size}]")
        return Injection(self.map + tuple(range(self.n + 1, size + 1)), size)

    def to_json(self) -> list[int]:
        return list(self.map)


def _check_same_sig(a: FiniteStructure, b: FiniteStructure) -> None:
    if a.sig != b.sig:
        raise MalformedInputError("structures have different signatures")


def apply_injection(M: FiniteStructure, phi: Injection) -> FiniteStructure:
    """Pullback ``M^φ``: a tuple x is in the output iff φ(x) is in M."""
    if phi.n != M.n:
        raise MalformedInputError(f"injection targets [{phi.n}] but structure lives on [{M.n}]")
    if phi.m == M.n and phi.map == tuple(range(1, M.n + 1)):
        return M
    inv = {v: i for i, v in enumerate(phi.map, start=1)}
    rels = []
    for r in M.relations:
        out = []
        for t in r:
            try:
                out.append(tuple(inv[c] for c in t))
            except KeyError:
                continue
        rels.append(frozenset(out))
    return FiniteStructure(M.sig, phi.m, rels, validate=False)


def push_forward(S: FiniteStructure, phi: Injection) -> FiniteStructure:
    """Copy of S over [φ.n] with every tuple relabelled by φ (no other tuples)."""
    if phi.m != S.n:
        raise MalformedInputError("injection domain does not match the structure")
    rels = [frozenset(tuple(phi.map[c - 1] for c in t) for t in r) for r in S.relations]
    return FiniteStructure(S.sig, phi.n, rels, validate=False)


def restrict(M: FiniteStructure, m: int) -> FiniteStructure:
    """Initial-segment restriction ``M|[m]``."""
    if not 0 <= m <= M.n:
        raise MalformedInputError(f"cannot restrict a structure on [{M.n}] to [{m}]")
    if m == M.n:
        return M
    rels = [frozenset(t for t in r if max(t) <= m) for r in M.relations]
    return FiniteStructure(M.sig, m, rels, validate=False)


def labeled_restriction(M: FiniteStructure, subset: Iterable[int]) -> tuple[frozenset, ...]:
    """Tuples of M lying inside ``subset``, labels kept (a comparison key)."""
    keep = frozenset(subset)
    return tuple(frozenset(t for t in r if keep.issuperset(t)) for r in M.relations)


def ultrametric(M: FiniteStructure, M2: FiniteStructure) -> Fraction:
    """Truncated ultrametric ``1/(1+k)`` with k the agreement depth.

    When the structures agree on all of [n] the value 1/(1+n) only bounds
    the distance between any infinite extensions from above.
    """
    _check_same_sig(M, M2)
    if M.n != M2.n:
        raise MalformedInputError(f"structures live on [{M.n}] and [{M2.n}]")
    k = M.n
    for r1, r2 in zip(M.relations, M2.relations):
        for t in r1.symmetric_difference(r2):
            k = min(k, max(t) - 1)
    return Fraction(1, 1 + k)


@lru_cache(maxsize=None)
def _tuples_with_last(k: int, arity: int) -> tuple[Tuple, ...]:
    """All tuples over [k] that mention k."""
    return tuple(t for t in itertools.product(range(1, k + 1), repeat=arity) if k in t)


def iter_embeddings(S: FiniteStructure, M: FiniteStructure, *, increasing: bool = False) -> Iterator[Injection]:
    """Injections φ with ``M^φ = S`` in lexicographic order."""
    _check_same_sig(S, M)
    m, n = S.n, M.n
    if m > n:
        return
    arities = S.sig.arities
    srels, mrels = S.relations, M.relations
    phi = [0] * m
    used = [False] * (n + 1)

    def ok(k: int) -> bool:
        for ar, sr, mr in zip(arities, srels, mrels):
            for t in _tuples_with_last(k, ar):
                if (t in sr) != (tuple(phi[c - 1] for c in t) in mr):
                    return False
        return True

    def dfs(k: int) -> Iterator[Injection]:
        if k > m:
            yield Injection(tuple(phi), n)
            return
        start = phi[k - 2] + 1 if increasing and k > 1 else 1
        for v in range(start, n + 1):
            if used[v]:
                continue
            phi[k - 1] = v
            if ok(k):
                used[v] = True
                yield from dfs(k + 1)
                used[v] = False
        phi[k - 1] = 0

    yield from dfs(1)


def enumerate_embeddings(S: FiniteStructure, M: FiniteStructure) -> list[Injection]:
    """All embeddings of S into M, duplicate-free and lexicographically ordered."""
    return list(iter_embeddings(S, M))


def is_isomorphic(M: FiniteStructure, M2: FiniteStructure) -> tuple[bool, Injection | None]:
    """Return ``(True, φ)`` with ``M^φ = M2`` when isomorphic, else ``(False, None)``."""
    _check_same_sig(M, M2)
    if M.n != M2.n or [len(r) for r in M.relations] != [len(r) for r in M2.relations]:
        return False, None
    for phi in iter_embeddings(M2, M):
        return True, phi
    return False, None


def is_symmetric(M: FiniteStructure) -> bool:
    """True iff every relation is closed under permuting coordinates."""
    for r in M.relations:
        for t in r:
            for p in itertools.permutations(t):
                if p not in r:
                    return False
    return True


def canonical_form(M: FiniteStructure) -> FiniteStructure:
    """Least relabelling of M under :attr:`FiniteStructure.sort_key`."""
    best = M
    for perm in itertools.permutations(range(1, M.n + 1)):
        cand = apply_injection(M, Injection(perm, M.n))
        if cand.sort_key < best.sort_key:
            best = cand
    return best
