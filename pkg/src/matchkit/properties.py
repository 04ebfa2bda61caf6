"""Randomized falsification suites for sub-additivity and non-expansiveness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, UnsupportedPolicyError
from .graph import CompatibilityGraph, independent_sets
from .input import make_rng
from .policy import (
    FCFM,
    LCFM,
    PolicySpec,
    apply_class,
    class_detail,
    draw_preference_orders,
    replay,
)

GEOMETRIC_CAP = 10


@dataclass
class PropertyReport:
    prop: str
    policy: str
    trials: int
    seed: Optional[int] = None
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def merge(self, other: "PropertyReport") -> "PropertyReport":
        return PropertyReport(self.prop, self.policy, self.trials + other.trials, self.seed,
                              self.violations + other.violations)

    def to_json(self) -> dict:
        return {
            "property": self.prop,
            "policy": self.policy,
            "trials": self.trials,
            "seed": self.seed,
            "passed": self.passed,
            "violations": self.violations,
        }


def _sigma_json(sigmas, g):
    if sigmas is None or all(s is None for s in sigmas):
        return None
    return [s.to_json(g) if s is not None else None for s in sigmas]


def subadditive_sides(z1, z2, policy: PolicySpec, g: CompatibilityGraph, sigmas=None) -> tuple[int, int, int]:
    """``(|Q(z1 z2)|, |Q(z1)|, |Q(z2)|)`` with one preference draw per position shared by both runs."""
    z1, z2 = tuple(z1), tuple(z2)
    s1 = s2 = None
    if sigmas is not None:
        if len(sigmas) != len(z1) + len(z2):
            raise InputError("need one preference list per arrival")
        s1, s2 = sigmas[: len(z1)], sigmas[len(z1):]
    joint = replay(z1 + z2, policy, g, sigmas=sigmas)
    return len(joint), len(replay(z1, policy, g, sigmas=s1)), len(replay(z2, policy, g, sigmas=s2))


def check_subadditive(policy: PolicySpec, g: CompatibilityGraph, trials: int, max_word_len: int = 8,
                      seed: int = 0, inject: Sequence = ()) -> PropertyReport:
    """Random search for |Q(z'z'')| > |Q(z')| + |Q(z'')|.

    Trial ``t`` draws its words and preferences from the stream keyed by
    ``(seed, t)``. ``inject`` lists extra ``(z', z'')`` pairs checked first
    with canonical preferences.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    report = PropertyReport("subadditive", policy.tag(g), trials, seed)

    def check(z1, z2, sigmas, trial):
        lhs, a, b = subadditive_sides(z1, z2, policy, g, sigmas)
        if lhs > a + b:
            report.violations.append({
                "trial": trial,
                "z1": g.format_word(z1),
                "z2": g.format_word(z2),
                "sigmas": _sigma_json(sigmas, g),
                "lhs": lhs,
                "rhs": [a, b],
            })

    for z1, z2 in inject:
        check(tuple(z1), tuple(z2), None, None)
    for t in range(trials):
        rng = make_rng(seed, t)
        l1, l2 = rng.integers(0, max_word_len + 1, size=2)
        z = rng.integers(0, g.n, size=l1 + l2).tolist()
        sig = draw_preference_orders(policy, g, rng, len(z)) if policy.needs_preferences else None
        check(tuple(z[:l1]), tuple(z[l1:]), sig, t)
    return report


def random_class_detail(g: CompatibilityGraph, rng: np.random.Generator, sets=None) -> tuple[int, ...]:
    """Uniform independent set (or the empty state), then geometric counts capped at 10."""
    if sets is None:
        sets = independent_sets(g)
    k = int(rng.integers(0, len(sets) + 1))
    x = [0] * g.n
    if k < len(sets):
        for i in sorted(sets[k].members):
            x[i] = int(min(rng.geometric(0.35), GEOMETRIC_CAP))
    return tuple(x)


def l1(x, y) -> int:
    return sum(abs(a - b) for a, b in zip(x, y))


def check_nonexpansive(policy: PolicySpec, g: CompatibilityGraph, trials: int, seed: int = 0) -> PropertyReport:
    """Random search for ||x' (.) v - x (.) v||_1 > ||x' - x||_1 under a common preference draw."""
    if policy.word_only:
        raise UnsupportedPolicyError(f"{policy.kind.value} is not a class-admissible policy")
    if trials < 1:
        raise InputError("trials must be >= 1")
    sets = independent_sets(g)
    report = PropertyReport("nonexpansive", policy.tag(g), trials, seed)
    for t in range(trials):
        rng = make_rng(seed, t)
        x = random_class_detail(g, rng, sets)
        y = random_class_detail(g, rng, sets)
        v = int(rng.integers(0, g.n))
        sigma = draw_preference_orders(policy, g, rng, 1)[0] if policy.needs_preferences else None
        before = l1(x, y)
        after = l1(apply_class(x, v, sigma, policy, g), apply_class(y, v, sigma, policy, g))
        if after > before:
            report.violations.append({
                "trial": t,
                "x": list(x),
                "x_prime": list(y),
                "arrival": g.name(v),
                "sigma": None if sigma is None else sigma.to_json(g),
                "before": before,
                "after": after,
            })
    return report


@dataclass(frozen=True)
class ExpansionCase:
    policy: str
    left: tuple
    right: tuple
    arrival: int
    before: int
    after: int

    def to_json(self, g) -> dict:
        return {
            "policy": self.policy,
            "words": [g.format_word(self.left), g.format_word(self.right)],
            "arrival": g.name(self.arrival),
            "distance_before": self.before,
            "distance_after": self.after,
            "expands": self.after > self.before,
        }


def word_expansion(left, right, v: int, policy: PolicySpec, g: CompatibilityGraph) -> ExpansionCase:
    """Class-detail distance of two words before and after one word-level arrival."""
    for w in (left, right):
        if not g.is_admissible(w):
            raise InputError(f"{g.format_word(w)!r} is not admissible")
    before = l1(class_detail(left, g), class_detail(right, g))
    a = replay((v,), policy, g, start=tuple(left))
    b = replay((v,), policy, g, start=tuple(right))
    return ExpansionCase(policy.kind.value, tuple(left), tuple(right), v,
                         before, l1(class_detail(a, g), class_detail(b, g)))


def replay_word_expansion_counterexamples(g: CompatibilityGraph) -> list[ExpansionCase]:
    """The two paw examples showing FCFM and LCFM expand class-detail distances."""
    w = g.parse_word
    two = g.index("2")
    return [
        word_expansion(w("133"), w("311"), two, FCFM, g),
        word_expansion(w("331"), w("113"), two, LCFM, g),
    ]
