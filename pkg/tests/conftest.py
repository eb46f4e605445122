from __future__ import annotations

import itertools
import sys

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from exchmarkov.classes import BINARY_SIG, SET_SIG, TERNARY_SIG, partition_from_blocks
from exchmarkov.structures import FiniteStructure, Injection, Signature

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def graph(n: int, edges) -> FiniteStructure:
    rel = {(a, b) for a, b in edges} | {(b, a) for a, b in edges}
    return FiniteStructure(BINARY_SIG, n, [rel])


def unary(n: int, members) -> FiniteStructure:
    return FiniteStructure(SET_SIG, n, [{(i,) for i in members}])


def part(n: int, *blocks) -> FiniteStructure:
    return partition_from_blocks([list(b) for b in blocks], n)


@st.composite
def structures(draw, sig: Signature = BINARY_SIG, min_n: int = 0, max_n: int = 5):
    n = draw(st.integers(min_n, max_n))
    rels = []
    for ar in sig.arities:
        space = list(itertools.product(range(1, n + 1), repeat=ar))
        rels.append(frozenset(draw(st.sets(st.sampled_from(space))) if space else set()))
    return FiniteStructure(sig, n, rels)


@st.composite
def permutations(draw, n: int):
    return Injection(tuple(draw(st.permutations(range(1, n + 1)))), n)


@st.composite
def injections(draw, m: int, n: int):
    values = draw(st.permutations(range(1, n + 1)))
    return Injection(tuple(values[:m]), n)


@pytest.fixture
def triangle():
    return graph(3, [(1, 2), (2, 3), (1, 3)])


@pytest.fixture
def path3():
    return graph(3, [(1, 2), (2, 3)])


@pytest.fixture
def edge():
    return graph(2, [(1, 2)])


__all__ = ["graph", "unary", "part", "structures", "permutations", "injections", "TERNARY_SIG"]


def pytest_terminal_summary(terminalreporter):
    lines = getattr(sys.modules.get("test_acceptance"), "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
