"""Erasing words: construction, verification and bounded search.

A word z of even length erases u when Q(z) and Q(u z) are both empty for
every preference sequence the policy can draw. Preference-free policies need
one replay; for the others the set of reachable buffers is propagated
arrival by arrival, which covers every preference sequence at once. When that
set grows past ``COVERAGE_BUDGET`` the check falls back to sampled sequences
and says so in the certificate.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import CapExceededError, InputError, UnsupportedPolicyError
from .graph import (
    CompatibilityGraph,
    _bfs,
    _path,
    distance,
    is_bipartite,
    separability_order,
    shortest_odd_cycle,
    shortest_path,
    spanning_odd_cycle,
)
from .input import make_rng
from .policy import (
    FCFM,
    PolicyKind,
    PolicySpec,
    draw_preference_orders,
    replay,
    step_word,
    word_branches,
)

COVERAGE_BUDGET = 10_000
SAMPLED_SEQUENCES = 1_000
DEFAULT_SEARCH_CAP = 8


# -- coverage ---------------------------------------------------------------------

def reachable(start, word, policy: PolicySpec, g: CompatibilityGraph, budget: int = COVERAGE_BUDGET) -> Optional[set]:
    """Every buffer Q(start . word) some preference sequence can produce, or None past the budget."""
    states = {tuple(start)}
    if not policy.needs_preferences:
        return {replay(word, policy, g, start=tuple(start))}
    for v in word:
        nxt = set()
        for w in states:
            for w2, _ in word_branches(w, v, policy, g):
                nxt.add(w2)
        if len(nxt) > budget:
            return None
        states = nxt
    return states


def _always_empty(start, word, policy, g, seed=0) -> tuple[bool, str]:
    """Whether Q(start . word) is empty for every preference sequence, and how that was checked."""
    out = reachable(start, word, policy, g)
    if out is not None:
        label = "replay" if not policy.needs_preferences else "enumeration"
        return out == {()}, label
    for k in range(SAMPLED_SEQUENCES):
        sig = draw_preference_orders(policy, g, make_rng(seed, k), len(word))
        if replay(word, policy, g, start=tuple(start), sigmas=sig):
            return False, f"sampled({SAMPLED_SEQUENCES})"
    return True, f"sampled({SAMPLED_SEQUENCES})"


def _weaker(a: str, b: str) -> str:
    order = {"replay": 0, "enumeration": 1}
    return max(a, b, key=lambda s: order.get(s, 2))


def _check_even(z):
    if len(z) % 2:
        raise InputError(f"erasing words have even length, got {len(z)}")


def _verify_erasing(g, u, z, policy) -> tuple[bool, str]:
    ok1, c1 = _always_empty((), z, policy, g)
    if not ok1:
        return False, c1
    ok2, c2 = _always_empty(tuple(u), z, policy, g)
    return ok2, _weaker(c1, c2)


def is_erasing_word(g: CompatibilityGraph, u, z, policy: PolicySpec = FCFM) -> bool:
    """Q(z) = Q(u z) = empty for every admissible preference sequence."""
    z = tuple(z)
    _check_even(z)
    return _verify_erasing(g, tuple(u), z, policy)[0]


def nonadjacent_pairs(g: CompatibilityGraph) -> list[tuple[int, int]]:
    """Ordered pairs (i, j), i = j included, forming an admissible two-letter word."""
    return [(i, j) for i in range(g.n) for j in range(g.n) if j not in g.adj[i]]


def _verify_strong(g, z, policy) -> tuple[bool, str]:
    coverage = "replay"
    for k in range(0, len(z), 2):
        ok, c = _always_empty((), z[k:], policy, g)
        coverage = _weaker(coverage, c)
        if not ok:
            return False, coverage
    for i, j in nonadjacent_pairs(g):
        ok, c = _always_empty((i, j), z, policy, g)
        coverage = _weaker(coverage, c)
        if not ok:
            return False, coverage
    return True, coverage


def is_strong_erasing_word(g: CompatibilityGraph, z, policy: PolicySpec = FCFM) -> bool:
    z = tuple(z)
    _check_even(z)
    return _verify_strong(g, z, policy)[0]


# -- certificates ------------------------------------------------------------------

@dataclass(frozen=True)
class ErasingCertificate:
    target: tuple
    word: tuple
    kind: str  # plain | strong | minimal
    verified_over: str  # replay | enumeration | sampled(n)
    policy: str
    reduced: Optional[bool] = None

    def transcript(self, g: CompatibilityGraph) -> dict:
        return {
            "graph": g.to_json(),
            "policy": self.policy,
            "kind": self.kind,
            "target": g.word_names(self.target),
            "word": g.word_names(self.word),
            "verified_over": self.verified_over,
        }

    def transcript_hash(self, g: CompatibilityGraph) -> str:
        blob = json.dumps(self.transcript(g), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_json(self, g: CompatibilityGraph) -> dict:
        out = {
            "kind": self.kind,
            "target": g.format_word(self.target),
            "word": g.format_word(self.word),
            "length": len(self.word),
            "policy": self.policy,
            "verified_over": self.verified_over,
        }
        if self.reduced is not None:
            out["reduced"] = self.reduced
        out["transcript_sha256"] = self.transcript_hash(g)
        return out


def _require_sub_additive(policy: PolicySpec):
    if not policy.sub_additive:
        raise UnsupportedPolicyError(f"{policy.kind.value} is not sub-additive; erasing words are not guaranteed")


def _require_non_bipartite(g):
    if is_bipartite(g)[0]:
        raise InputError("erasing words need a non-bipartite graph")


# -- two-letter construction ------------------------------------------------------------

def _cycle_from(cycle: tuple, start: int) -> list[int]:
    k = cycle.index(start)
    return list(cycle[k:] + cycle[:k])


def construct_two_letter(g: CompatibilityGraph, i: int, j: int) -> tuple[int, ...]:
    """Candidate from the path/odd-cycle argument, before verification."""
    if i == j:
        # the word ii behaves like a pair at distance 2 through any neighbour
        path = [i, min(g.adj[i]), j]
    else:
        path = shortest_path(g, i, j)
    p = len(path) - 1
    interior = path[1:-1]
    if p % 2 == 1:
        return tuple(interior)
    last = interior[-1]
    y1 = interior + [last]
    cycle = shortest_odd_cycle(g)
    on_cycle = set(cycle)
    if last in on_cycle:
        # the path to the cycle is empty: the two copies of `last` act as k1 k1
        ks = _cycle_from(cycle, last)
        return tuple(y1 + ks[1:])
    dist, parent = _bfs(g, last)
    k1 = min(on_cycle, key=lambda c: (dist[c], c))
    route = _path(parent, k1)  # last, j1, ..., jq, k1
    js = route[1:-1]
    ks = _cycle_from(cycle, k1)
    y2 = [x for jx in js for x in (jx, jx)] + [k1, k1] + ks[1:]
    return tuple(y1 + y2)


def _even_words(n: int, length: int):
    return itertools.product(range(n), repeat=length)


def _search(g, pred, cap: int):
    for length in range(0, cap + 1, 2):
        for z in _even_words(g.n, length):
            if pred(z):
                return z
    return None


def two_letter_erasing_word(g: CompatibilityGraph, i: int, j: int, policy: PolicySpec = FCFM,
                            search_cap: int = DEFAULT_SEARCH_CAP) -> ErasingCertificate:
    g.check_vertex(i)
    g.check_vertex(j)
    if j in g.adj[i]:
        raise InputError(f"{g.name(i)}{g.name(j)} is not admissible: the letters are adjacent")
    _require_non_bipartite(g)
    z = construct_two_letter(g, i, j)
    ok, coverage = _verify_erasing(g, (i, j), z, policy)
    if not ok:
        found = _search(g, lambda w: _verify_erasing(g, (i, j), w, policy)[0], search_cap)
        if found is None:
            raise CapExceededError(f"no erasing word of {g.format_word((i, j))!r} up to length {search_cap}", cap=search_cap)
        z = tuple(found)
        coverage = _verify_erasing(g, (i, j), z, policy)[1]
    return ErasingCertificate((i, j), z, "plain", coverage, policy.tag(g))


def erasing_word(g: CompatibilityGraph, u, policy: PolicySpec = FCFM, max_rounds: int = 1000) -> ErasingCertificate:
    """Erase u two letters at a time from the right.

    With several reachable residuals the longest one drives the next round;
    sub-additivity guarantees no residual grows and the chosen one shrinks.
    """
    u = tuple(u)
    _check_even(u)
    if not g.is_admissible(u):
        raise InputError(f"{g.format_word(u)!r} is not admissible")
    _require_sub_additive(policy)
    if u:
        _require_non_bipartite(g)
    z: tuple = ()
    cache: dict = {}
    for _ in range(max_rounds):
        residuals = reachable(u, z, policy, g)
        if residuals is None:
            residuals = {replay(z, policy, g, start=u)}
        residuals.discard(())
        if not residuals:
            break
        r = max(residuals, key=lambda w: (len(w), w))
        key = r[-2:]
        if key not in cache:
            cache[key] = two_letter_erasing_word(g, key[0], key[1], policy).word
        z = z + cache[key]
    ok, coverage = _verify_erasing(g, u, z, policy)
    if not ok:
        raise CapExceededError(f"could not erase {g.format_word(u)!r} within {max_rounds} rounds", cap=max_rounds)
    return ErasingCertificate(u, z, "plain", coverage, policy.tag(g))


# -- minimal words ---------------------------------------------------------------------

def is_reduced(g: CompatibilityGraph, u, z, policy: PolicySpec = FCFM) -> bool:
    """No split z = z1 z2 into two non-empty erasing words of u."""
    z = tuple(z)
    for k in range(2, len(z), 2):
        if is_erasing_word(g, u, z[:k], policy) and is_erasing_word(g, u, z[k:], policy):
            return False
    return True


def minimal_erasing_word(g: CompatibilityGraph, u, policy: PolicySpec = FCFM,
                         len_cap: int = DEFAULT_SEARCH_CAP) -> Optional[ErasingCertificate]:
    """Shortest erasing word of u up to ``len_cap`` letters, by exhaustive search."""
    u = tuple(u)
    _check_even(u)
    if not g.is_admissible(u):
        raise InputError(f"{g.format_word(u)!r} is not admissible")
    found = _search(g, lambda w: _verify_erasing(g, u, w, policy)[0], len_cap)
    if found is None:
        return None
    z = tuple(found)
    return ErasingCertificate(u, z, "minimal", _verify_erasing(g, u, z, policy)[1], policy.tag(g),
                              reduced=is_reduced(g, u, z, policy))


# -- strong words ------------------------------------------------------------------------

def separable_strong_candidates(g: CompatibilityGraph) -> list[tuple[int, ...]]:
    """Words with two letters per part, pairs taken from consecutive parts cyclically."""
    sep = separability_order(g)
    if sep is None or sep[0] < 3:
        return []
    parts = sorted((sorted(p) for p in sep[1]), key=lambda p: p[0])
    a = [p[0] for p in parts]
    b = [p[1 % len(p)] for p in parts]
    k = len(parts)
    # pairs (a0 a1)(b1 a2)...(b_{k-1} b0): each aligned pair joins two parts
    cyclic = [a[0], a[1]]
    for m in range(1, k - 1):
        cyclic += [b[m], a[m + 1]]
    cyclic += [b[k - 1], b[0]]
    grouped = [x for m in range(k) for x in (a[m], b[m])]
    return [tuple(cyclic), tuple(grouped)]


def _lcfm_like(policy: PolicySpec, walk) -> bool:
    if policy.kind is PolicyKind.LCFM:
        return True
    if policy.kind is not PolicyKind.PRIORITY:
        return False
    sigma = policy.sigma_star
    n = len(walk)
    prefs = {}
    for k, c in enumerate(walk):
        prev = walk[k - 1] if k else walk[n - 1]
        if prefs.setdefault(c, prev) != prev:
            return False
    return all(sigma[c][0] == prev for c, prev in prefs.items())


def strong_erasing_word(g: CompatibilityGraph, policy: PolicySpec = FCFM,
                        search_cap: int = DEFAULT_SEARCH_CAP) -> Optional[ErasingCertificate]:
    """A verified strong erasing word, from a construction when one applies, else by search."""
    _require_non_bipartite(g)
    tag = policy.tag(g)
    candidates = list(separable_strong_candidates(g))
    walk = spanning_odd_cycle(g)
    if walk is not None and (_lcfm_like(policy, walk) or not candidates):
        candidates.append(tuple(walk) * 4)
    for z in candidates:
        ok, coverage = _verify_strong(g, z, policy)
        if ok:
            return ErasingCertificate((), z, "strong", coverage, tag)
    found = _search(g, lambda w: bool(w) and _verify_strong(g, w, policy)[0], search_cap)
    if found is None:
        return None
    z = tuple(found)
    return ErasingCertificate((), z, "strong", _verify_strong(g, z, policy)[1], tag)


def strong_erasing_library(g: CompatibilityGraph, policy: PolicySpec, length: int, limit: Optional[int] = None) -> list[tuple]:
    """Every strong erasing word of the given length, in lexicographic order."""
    _check_even((0,) * length)
    out = []
    for z in _even_words(g.n, length):
        # cheap filter first: the word itself must be perfectly matchable
        if replay(z, policy, g) and not policy.needs_preferences:
            continue
        if _verify_strong(g, z, policy)[0]:
            out.append(z)
            if limit is not None and len(out) >= limit:
                break
    return out


def verify_certificate(g: CompatibilityGraph, cert: ErasingCertificate, policy: PolicySpec) -> bool:
    if cert.kind == "strong":
        return is_strong_erasing_word(g, cert.word, policy)
    return is_erasing_word(g, cert.target, cert.word, policy)
