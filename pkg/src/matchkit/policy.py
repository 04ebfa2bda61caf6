"""Matching policies acting on queue words and on class-count vectors.

A queue word is a tuple of vertex indices, oldest item first, no two letters
adjacent. A class detail is the tuple of per-class counts of such a word.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, UnsupportedPolicyError
from .graph import CompatibilityGraph


class PolicyKind(str, enum.Enum):
    FCFM = "fcfm"
    LCFM = "lcfm"
    ML = "ml"
    MS = "ms"
    PRIORITY = "priority"
    UNIFORM = "uniform"
    RANDOM = "random"


WORD_ONLY = frozenset({PolicyKind.FCFM, PolicyKind.LCFM})
SUB_ADDITIVE = frozenset(set(PolicyKind) - {PolicyKind.MS})


class PreferenceList:
    """One ordering of E(i) per vertex i."""

    __slots__ = ("orders", "_hash")

    def __init__(self, orders: Sequence[Sequence[int]]):
        self.orders = tuple(tuple(int(x) for x in o) for o in orders)
        self._hash = hash(self.orders)

    def validate(self, g: CompatibilityGraph) -> "PreferenceList":
        if len(self.orders) != g.n:
            raise InputError("preference list must have one ordering per vertex")
        for i, order in enumerate(self.orders):
            if len(order) != len(g.adj[i]) or set(order) != g.adj[i]:
                raise InputError(f"preferences of {g.name(i)!r} must be a permutation of its neighbours")
        return self

    def __getitem__(self, i: int) -> tuple[int, ...]:
        return self.orders[i]

    def __eq__(self, other):
        return isinstance(other, PreferenceList) and self.orders == other.orders

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"PreferenceList({self.orders})"

    @classmethod
    def canonical(cls, g: CompatibilityGraph) -> "PreferenceList":
        return _canonical(g)

    @classmethod
    def from_json(cls, g: CompatibilityGraph, data) -> "PreferenceList":
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, dict):
            raise InputError("perm-spec must be a JSON object vertex -> neighbour list")
        orders = []
        for v in g.vertices:
            if v not in data:
                raise InputError(f"perm-spec misses vertex {v!r}")
            orders.append([g.index(x) for x in data[v]])
        return cls(orders).validate(g)

    def to_json(self, g: CompatibilityGraph) -> dict:
        return {g.name(i): g.word_names(o) for i, o in enumerate(self.orders)}


_CANONICAL_CACHE: dict = {}


def _canonical(g: CompatibilityGraph) -> PreferenceList:
    key = (g.vertices, g.edges)
    pl = _CANONICAL_CACHE.get(key)
    if pl is None:
        pl = _CANONICAL_CACHE[key] = PreferenceList([sorted(a) for a in g.adj])
    return pl


@dataclass(frozen=True)
class PolicySpec:
    kind: PolicyKind
    sigma_star: Optional[PreferenceList] = None
    choices: tuple = ()  # RANDOM: support of the preference distribution
    weights: tuple = ()  # RANDOM: exact probabilities of ``choices``

    def __post_init__(self):
        if self.kind is PolicyKind.PRIORITY and self.sigma_star is None:
            raise InputError("priority policy needs a fixed preference list")
        if self.kind is PolicyKind.RANDOM:
            if not self.choices or len(self.choices) != len(self.weights):
                raise InputError("random policy needs choices with matching weights")
            if sum(self.weights) != 1 or any(w <= 0 for w in self.weights):
                raise InputError("random policy weights must be positive and sum to 1")

    @classmethod
    def priority(cls, sigma: PreferenceList) -> "PolicySpec":
        return cls(PolicyKind.PRIORITY, sigma_star=sigma)

    @classmethod
    def random(cls, choices: Sequence[PreferenceList], weights: Sequence) -> "PolicySpec":
        return cls(PolicyKind.RANDOM, choices=tuple(choices), weights=tuple(Fraction(w) for w in weights))

    @property
    def word_only(self) -> bool:
        return self.kind in WORD_ONLY

    @property
    def sub_additive(self) -> bool:
        return self.kind in SUB_ADDITIVE

    @property
    def needs_preferences(self) -> bool:
        """True when the matching decision can depend on the drawn list."""
        return self.kind in (PolicyKind.UNIFORM, PolicyKind.ML, PolicyKind.RANDOM)

    def validate(self, g: CompatibilityGraph) -> "PolicySpec":
        if self.sigma_star is not None:
            self.sigma_star.validate(g)
        for c in self.choices:
            c.validate(g)
        return self

    def tag(self, g: Optional[CompatibilityGraph] = None) -> str:
        if self.kind is PolicyKind.PRIORITY:
            if g is None:
                return "priority"
            return "priority:" + json.dumps(self.sigma_star.to_json(g), separators=(",", ":"))
        if self.kind is PolicyKind.RANDOM:
            if g is None:
                return "random"
            spec = [{"weight": f"{w.numerator}/{w.denominator}", "sigma": c.to_json(g)}
                    for c, w in zip(self.choices, self.weights)]
            return "random:" + json.dumps(spec, separators=(",", ":"))
        return self.kind.value

    def __str__(self):
        return self.tag()


FCFM = PolicySpec(PolicyKind.FCFM)
LCFM = PolicySpec(PolicyKind.LCFM)
ML = PolicySpec(PolicyKind.ML)
MS = PolicySpec(PolicyKind.MS)
UNIFORM = PolicySpec(PolicyKind.UNIFORM)


def parse_policy(tag: str, g: CompatibilityGraph) -> PolicySpec:
    """Inverse of ``PolicySpec.tag``."""
    tag = tag.strip()
    head, _, rest = tag.partition(":")
    head = head.lower()
    simple = {"fcfm": FCFM, "lcfm": LCFM, "ml": ML, "ms": MS, "uniform": UNIFORM}
    if head in simple and not rest:
        return simple[head]
    try:
        if head == "priority" and rest:
            return PolicySpec.priority(PreferenceList.from_json(g, rest))
        if head == "random" and rest:
            items = json.loads(rest)
            return PolicySpec.random(
                [PreferenceList.from_json(g, it["sigma"]) for it in items],
                [Fraction(it["weight"]) for it in items],
            )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad policy spec {tag!r}: {exc}") from exc
    raise InputError(f"unknown policy {tag!r}")


# -- preference draws ----------------------------------------------------------

def draw_preferences(policy: PolicySpec, g: CompatibilityGraph, rng: np.random.Generator) -> PreferenceList:
    kind = policy.kind
    if kind is PolicyKind.PRIORITY:
        return policy.sigma_star
    if kind in (PolicyKind.UNIFORM, PolicyKind.ML):
        return PreferenceList([tuple(rng.permutation(sorted(a)).tolist()) for a in g.adj])
    if kind is PolicyKind.RANDOM:
        probs = np.array([float(w) for w in policy.weights])
        return policy.choices[int(rng.choice(len(probs), p=probs / probs.sum()))]
    return _canonical(g)


def draw_preference_orders(policy: PolicySpec, g: CompatibilityGraph, rng: np.random.Generator, n: int) -> list:
    """``n`` independent draws, vectorised for the uniform case."""
    kind = policy.kind
    if kind in (PolicyKind.UNIFORM, PolicyKind.ML):
        per_vertex = []
        for a in g.adj:
            nb = np.array(sorted(a), dtype=np.int64)
            perms = nb[np.argsort(rng.random((n, len(nb))), axis=1)] if len(nb) else np.zeros((n, 0), np.int64)
            per_vertex.append([tuple(row) for row in perms.tolist()])
        return [PreferenceList(orders) for orders in zip(*per_vertex)] if n else []
    if kind is PolicyKind.RANDOM:
        probs = np.array([float(w) for w in policy.weights])
        idx = rng.choice(len(probs), size=n, p=probs / probs.sum())
        return [policy.choices[int(i)] for i in idx]
    fixed = policy.sigma_star if kind is PolicyKind.PRIORITY else _canonical(g)
    return [fixed] * n


def sigma_for(policy: PolicySpec, sigma, g: CompatibilityGraph) -> PreferenceList:
    """The list actually used by ``policy`` given a drawn (or missing) ``sigma``."""
    if policy.kind is PolicyKind.PRIORITY:
        return policy.sigma_star
    if sigma is None:
        return _canonical(g)
    return sigma


# -- class choice ----------------------------------------------------------------

def _pick(counts, order, kind: PolicyKind) -> Optional[int]:
    present = [k for k in order if counts[k] > 0]
    if not present:
        return None
    if kind is PolicyKind.ML:
        top = max(counts[k] for k in present)
        return next(k for k in present if counts[k] == top)
    if kind is PolicyKind.MS:
        low = min(counts[k] for k in present)
        return next(k for k in present if counts[k] == low)
    return present[0]


def _check_class_detail(x, g: CompatibilityGraph):
    if len(x) != g.n or any((not isinstance(c, (int, np.integer))) or c < 0 for c in x):
        raise InputError(f"class detail {x!r} must be {g.n} non-negative integers")
    for i, j in g.edges:
        if x[i] and x[j]:
            raise InputError(f"class detail {x!r} has both {g.name(i)} and {g.name(j)} waiting")


def _class_policy(policy: PolicySpec):
    if policy.word_only:
        raise UnsupportedPolicyError(f"{policy.kind.value} acts on queue words only, not on class details")


def match_class(x, v: int, sigma, policy: PolicySpec, g: CompatibilityGraph) -> Optional[int]:
    """Class of the item matched with an arrival of class ``v``, or None."""
    _class_policy(policy)
    _check_class_detail(x, g)
    g.check_vertex(v)
    return _pick(x, sigma_for(policy, sigma, g)[v], policy.kind)


def apply_class(x, v: int, sigma, policy: PolicySpec, g: CompatibilityGraph) -> tuple[int, ...]:
    c = match_class(x, v, sigma, policy, g)
    out = list(x)
    if c is None:
        out[v] += 1
    else:
        out[c] -= 1
    return tuple(out)


def class_detail(w, g: CompatibilityGraph) -> tuple[int, ...]:
    """Commutative image [w]."""
    counts = [0] * g.n
    for a in w:
        counts[a] += 1
    return tuple(counts)


def choosable_classes(x, v: int, policy: PolicySpec, g: CompatibilityGraph) -> set:
    """Every class some preference list in the support of the policy could pick."""
    adj = g.adj[v]
    present = [k for k in adj if x[k] > 0]
    if not present:
        return set()
    kind = policy.kind
    if kind is PolicyKind.UNIFORM:
        return set(present)
    if kind is PolicyKind.ML:
        top = max(x[k] for k in present)
        return {k for k in present if x[k] == top}
    if kind is PolicyKind.RANDOM:
        return {_pick(x, s[v], kind) for s in policy.choices}
    return {_pick(x, sigma_for(policy, None, g)[v], kind)}


# -- queue words -------------------------------------------------------------------

def step_word(w: tuple, v: int, sigma, policy: PolicySpec, g: CompatibilityGraph):
    """One arrival on an (assumed admissible) word: ``(new_word, removed_index)``."""
    adj = g.adj[v]
    kind = policy.kind
    if kind is PolicyKind.FCFM:
        for k, a in enumerate(w):
            if a in adj:
                return w[:k] + w[k + 1:], k
        return w + (v,), None
    if kind is PolicyKind.LCFM:
        for k in range(len(w) - 1, -1, -1):
            if w[k] in adj:
                return w[:k] + w[k + 1:], k
        return w + (v,), None
    counts = [0] * g.n
    hit = False
    for a in w:
        if a in adj:
            counts[a] += 1
            hit = True
    if not hit:
        return w + (v,), None
    c = _pick(counts, sigma_for(policy, sigma, g)[v], kind)
    k = w.index(c)
    return w[:k] + w[k + 1:], k


def apply_word(w, v: int, sigma, policy: PolicySpec, g: CompatibilityGraph):
    """``w ⊙ (v, sigma)``; returns the new word and the removed position (or None)."""
    w = tuple(w)
    for a in w:
        g.check_vertex(a)
    if not g.is_admissible(w):
        raise InputError(f"queue word {g.format_word(w)!r} has adjacent letters")
    g.check_vertex(v)
    return step_word(w, v, sigma, policy, g)


def word_branches(w: tuple, v: int, policy: PolicySpec, g: CompatibilityGraph) -> list:
    """All ``(new_word, removed_index)`` reachable for some admissible preference draw."""
    if policy.word_only or not policy.needs_preferences:
        return [step_word(w, v, None, policy, g)]
    counts = class_detail(w, g)
    options = choosable_classes(counts, v, policy, g)
    if not options:
        return [(w + (v,), None)]
    out = []
    for c in sorted(options):
        k = w.index(c)
        out.append((w[:k] + w[k + 1:], k))
    return out


def replay(word, policy: PolicySpec, g: CompatibilityGraph, start: tuple = (), sigmas=None) -> tuple:
    """Q(start · word) for one preference sequence (canonical when omitted)."""
    w = tuple(start)
    for t, v in enumerate(word):
        w, _ = step_word(w, v, None if sigmas is None else sigmas[t], policy, g)
    return w
