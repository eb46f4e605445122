"""Discrete-time μ-chains: iterate i.i.d. kernels and test the induced law."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import partial
from typing import Iterable

from ._parallel import ordered_map
from ._seeding import derive_seed
from .errors import DomainError, MalformedInputError, StepError
from .kernels import KernelSampler, apply
from .structures import FiniteStructure, Injection, apply_injection, restrict
from .verdict import FAIL, PASS, Verdict


@dataclass
class Trajectory:
    """States over [n] indexed by step; ``states[0]`` is the initial state."""

    n: int
    states: list[FiniteStructure] = field(default_factory=list)

    def __post_init__(self):
        for S in self.states:
            if S.n != self.n or S.sig != self.states[0].sig:
                raise MalformedInputError("trajectory states must share n and signature")

    def __len__(self) -> int:
        return len(self.states)

    def times(self) -> list[float]:
        return [float(m) for m in range(len(self.states))]

    def restrict(self, m: int) -> "Trajectory":
        return Trajectory(m, [restrict(S, m) for S in self.states])


def step_seed(seed: int, m: int) -> int:
    """Seed of the kernel used for step m (1-based)."""
    return derive_seed(seed, "step", m)


def run_chain(mu: KernelSampler, M0: FiniteStructure, steps: int, seed: int) -> Trajectory:
    """Iterate ``X_m = F_m(X_{m-1})`` with ``F_m`` sampled from ``mu``."""
    if steps < 0:
        raise MalformedInputError("steps must be nonnegative")
    if not mu.cls.contains(M0):
        raise DomainError("initial state is not a member of the sampler's class")
    states = [M0]
    X = M0
    for m in range(1, steps + 1):
        try:
            X = apply(mu.sample(step_seed(seed, m)), X, check=False)
        except Exception as exc:
            raise StepError(m, exc) from exc
        states.append(X)
    return Trajectory(M0.n, states)


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    replicas: int

    def to_json(self) -> dict:
        return {"value": self.value, "stderr": self.stderr, "replicas": self.replicas}


def estimate_transition(mu: KernelSampler, S: FiniteStructure, S2: FiniteStructure, replicas: int,
                        seed: int) -> Estimate:
    """Empirical ``P(F(S) = S2)`` for F drawn from ``mu``."""
    if replicas < 1:
        raise MalformedInputError("replicas must be positive")
    hits = sum(apply(mu.sample(derive_seed(seed, "rep", r)), S, check=False) == S2 for r in range(replicas))
    p = hits / replicas
    return Estimate(p, math.sqrt(p * (1 - p) / replicas), replicas)


def tv_distance(a: Counter, b: Counter) -> float:
    na, nb = sum(a.values()), sum(b.values())
    return 0.5 * sum(abs(a.get(k, 0) / na - b.get(k, 0) / nb) for k in set(a) | set(b))


def tv_allowance(a: Counter, b: Counter) -> float:
    """3σ allowance on the empirical TV between two independent multinomial samples."""
    na, nb = sum(a.values()), sum(b.values())
    total = 0.0
    for k in set(a) | set(b):
        p = (a.get(k, 0) + b.get(k, 0)) / (na + nb)
        total += math.sqrt(p * (1 - p) * (1 / na + 1 / nb))
    return 3 * 0.5 * total


def _images(mu: KernelSampler, states: list[FiniteStructure], stream: str, seed: int, r: int) -> list:
    F = mu.sample(derive_seed(seed, stream, r))
    return [F._apply(S) for S in states]


def check_exchangeability(mu: KernelSampler, n: int, replicas: int = 10_000, seed: int = 0,
                          tol: float = 0.03) -> Verdict:
    """Compare the laws of ``F(S)^σ`` and ``F(S^σ)`` for every S in X_[n] and σ in S_n.

    Two independent kernel streams are used, so the comparison is between
    independent samples; the threshold is ``tol`` plus a 3σ allowance.
    """
    import itertools

    states = list(mu.cls.enumerate(n))
    index = {S: i for i, S in enumerate(states)}
    laws = {}
    for stream in ("A", "B"):
        rows = ordered_map(partial(_images, mu, states, stream, seed), range(replicas))
        laws[stream] = [Counter(row[i] for row in rows) for i in range(len(states))]
    worst = (0.0, None)
    for perm in itertools.permutations(range(1, n + 1)):
        sigma = Injection(perm, n)
        for i, S in enumerate(states):
            pushed = Counter()
            for T, c in laws["A"][i].items():
                pushed[apply_injection(T, sigma)] += c
            other = laws["B"][index[apply_injection(S, sigma)]]
            tv = tv_distance(pushed, other)
            excess = tv - tol - tv_allowance(pushed, other)
            if worst[1] is None or excess > worst[0]:
                worst = (excess, {"S": S.to_dict(), "sigma": list(perm), "tv": tv,
                                  "threshold": tol + tv_allowance(pushed, other)})
    details = {"n": n, "replicas": replicas, "tol": tol, "worst": worst[1]}
    if worst[0] > 0:
        return Verdict(FAIL, worst[1], details)
    return Verdict(PASS, details=details)


def _restricted_path(mu, M0, steps, n, stream, seed, r):
    traj = run_chain(mu, M0, steps, derive_seed(seed, stream, r))
    return [restrict(S, n) for S in traj.states[1:]]


def check_projectivity(mu: KernelSampler, n: int, steps: int, replicas: int = 10_000, seed: int = 0,
                       tol: float = 0.03, init: FiniteStructure | None = None) -> Verdict:
    """Compare the law of the [n+1]-chain restricted to [n] with the [n]-chain, step by step."""
    if init is None:
        init = mu.cls.enumerate(n + 1)[0]
    if init.n != n + 1:
        raise MalformedInputError(f"init must live on [{n + 1}]")
    big = ordered_map(partial(_restricted_path, mu, init, steps, n, "big", seed), range(replicas))
    small = ordered_map(partial(_restricted_path, mu, restrict(init, n), steps, n, "small", seed), range(replicas))
    per_step = []
    failing = None
    for m in range(steps):
        a = Counter(path[m] for path in big)
        b = Counter(path[m] for path in small)
        tv, allow = tv_distance(a, b), tv_allowance(a, b)
        per_step.append({"step": m + 1, "tv": tv, "threshold": tol + allow})
        if failing is None and tv > tol + allow:
            failing = per_step[-1]
    details = {"n": n, "steps": steps, "replicas": replicas, "per_step": per_step}
    if failing is not None:
        return Verdict(FAIL, failing, details)
    return Verdict(PASS, details=details)


def occupancy(states: Iterable[FiniteStructure]) -> Counter:
    return Counter(states)
