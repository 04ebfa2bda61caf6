"""Shared fixtures and small reference implementations used as independent oracles."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest

from matchkit.graph import complete, octahedron, paw, single_edge
from matchkit.input import Measure

PAW_MU = ("1/5", "3/10", "1/4", "1/4")


@pytest.fixture
def g_paw():
    return paw()


@pytest.fixture
def mu_paw():
    return Measure(PAW_MU)


@pytest.fixture
def g_k3():
    return complete(3)


@pytest.fixture
def g_weak6():
    return octahedron()


# -- reference oracles, written without the library's policy code --------------------

def edge_set(g):
    return {frozenset(e) for e in g.edges}


def ref_fcfm(word, g, start=()):
    """Oldest compatible item first; returns (buffer, pairs by position)."""
    E = edge_set(g)
    buf = list(enumerate(start, start=-len(start)))
    pairs = []
    for t, v in enumerate(word):
        for k, (p, c) in enumerate(buf):
            if frozenset((c, v)) in E:
                pairs.append((p, t))
                del buf[k]
                break
        else:
            buf.append((t, v))
    return tuple(c for _, c in buf), pairs


def ref_lcfm(word, g, start=()):
    E = edge_set(g)
    buf = list(start)
    for v in word:
        for k in range(len(buf) - 1, -1, -1):
            if frozenset((buf[k], v)) in E:
                del buf[k]
                break
        else:
            buf.append(v)
    return tuple(buf)


def brute_independent_sets(g):
    E = edge_set(g)
    out = []
    for mask in range(1, 1 << g.n):
        s = [i for i in range(g.n) if mask >> i & 1]
        if all(frozenset(p) not in E for p in itertools.combinations(s, 2)):
            out.append(frozenset(s))
    return out


def brute_pi_w(word, g, mu):
    """Direct product of mu(w_l)/mu(E(w_1..w_l))."""
    out = Fraction(1)
    for l in range(1, len(word) + 1):
        prefix = set(word[:l])
        nb = {j for i in prefix for j in range(g.n) if frozenset((i, j)) in edge_set(g)}
        out *= Fraction(mu[word[l - 1]]) / sum((Fraction(mu[j]) for j in nb), Fraction(0))
    return out


def brute_admissible(word, g):
    E = edge_set(g)
    return all(frozenset((a, b)) not in E for a, b in itertools.combinations(set(word), 2))


def random_admissible_even(g, rng, max_len=8, nonempty=True):
    sets = brute_independent_sets(g)
    s = sorted(sets[int(rng.integers(len(sets)))])
    lengths = list(range(2 if nonempty else 0, max_len + 1, 2))
    L = int(rng.choice(lengths))
    return tuple(int(x) for x in rng.choice(s, size=L))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
