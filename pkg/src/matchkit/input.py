"""Arrival measures, the stability condition and arrival streams."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InputError
from .graph import CompatibilityGraph, IndependentSet, independent_sets, neighborhood


def to_fraction(value) -> Fraction:
    """Exact rational from ``"p/q"``, an int, a Fraction or a float (via its repr)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InputError(f"not a probability: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"cannot parse rational {value!r}") from exc
    raise InputError(f"not a probability: {value!r}")


def format_fraction(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


class Measure:
    """A full-support probability vector on the vertices, kept as exact rationals."""

    __slots__ = ("weights", "_floats", "_cdf")

    def __init__(self, weights: Sequence):
        ws = tuple(to_fraction(w) for w in weights)
        if not ws:
            raise InputError("empty measure")
        if any(w <= 0 for w in ws):
            raise InputError("measure must give positive mass to every vertex")
        total = sum(ws)
        if total != 1:
            raise InputError(f"measure weights sum to {total}, not 1")
        self.weights = ws
        self._floats = np.array([float(w) for w in ws])
        cdf = np.cumsum(self._floats)
        cdf[-1] = 1.0
        self._cdf = cdf

    @classmethod
    def uniform(cls, g: CompatibilityGraph) -> "Measure":
        return cls([Fraction(1, g.n)] * g.n)

    @classmethod
    def from_mapping(cls, g: CompatibilityGraph, data: dict) -> "Measure":
        if set(map(str, data)) != set(g.vertices):
            missing = set(g.vertices) - set(map(str, data))
            extra = set(map(str, data)) - set(g.vertices)
            raise InputError(f"measure keys do not match vertices (missing {sorted(missing)}, extra {sorted(extra)})")
        lookup = {str(k): v for k, v in data.items()}
        return cls([lookup[v] for v in g.vertices])

    @classmethod
    def from_json(cls, g: CompatibilityGraph, source) -> "Measure":
        if isinstance(source, (str, Path)):
            try:
                source = json.loads(Path(source).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise InputError(f"cannot read measure file: {exc}") from exc
        if not isinstance(source, dict):
            raise InputError("measure JSON must be an object")
        return cls.from_mapping(g, source)

    def to_json(self, g: CompatibilityGraph) -> dict:
        return {g.vertices[i]: format_fraction(w) for i, w in enumerate(self.weights)}

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, i: int) -> Fraction:
        return self.weights[i]

    def mass(self, subset: Iterable[int]) -> Fraction:
        return sum((self.weights[i] for i in subset), Fraction(0))

    @property
    def floats(self) -> np.ndarray:
        return self._floats

    @property
    def cdf(self) -> np.ndarray:
        return self._cdf

    def __eq__(self, other):
        return isinstance(other, Measure) and self.weights == other.weights

    def __hash__(self):
        return hash(self.weights)

    def __repr__(self):
        return "Measure(" + ", ".join(map(str, self.weights)) + ")"


@dataclass(frozen=True)
class NcondReport:
    satisfied: bool
    violations: list  # (IndependentSet, mu(I), mu(E(I)))

    def to_json(self, g: CompatibilityGraph) -> dict:
        return {
            "satisfied": self.satisfied,
            "violations": [
                {
                    "set": g.word_names(s.sorted()),
                    "maximal": s.maximal,
                    "mu_I": format_fraction(a),
                    "mu_E_I": format_fraction(b),
                }
                for s, a, b in self.violations
            ],
        }


def check_ncond(g: CompatibilityGraph, mu: Measure) -> NcondReport:
    """Check mu(I) < mu(E(I)) for every independent set I, exactly."""
    if len(mu) != g.n:
        raise InputError("measure and graph sizes differ")
    bad = []
    for s in independent_sets(g):
        a = mu.mass(s.members)
        b = mu.mass(neighborhood(g, s.members))
        if not a < b:
            bad.append((s, a, b))
    return NcondReport(not bad, bad)


# -- arrival events -----------------------------------------------------------

@dataclass(frozen=True, slots=True)
class ArrivalEvent:
    cls: int
    sigma: object = None  # PreferenceList; None means canonical


@dataclass(frozen=True, slots=True)
class PairedEvent:
    first: ArrivalEvent
    second: ArrivalEvent


@dataclass(frozen=True)
class StreamSpec:
    kind: str  # "iid" or "periodic"
    measure: Optional[Measure] = None
    policy: object = None  # PolicySpec, drives the preference draws
    seed: int = 0
    word: tuple = ()
    phase: int = 0

    def __post_init__(self):
        if self.kind == "iid":
            if self.measure is None:
                raise InputError("iid stream needs a measure")
        elif self.kind == "periodic":
            if not self.word:
                raise InputError("periodic stream needs a non-empty word")
        else:
            raise InputError(f"unknown stream kind {self.kind!r}")


def iid_stream(measure: Measure, policy=None, seed: int = 0) -> StreamSpec:
    return StreamSpec("iid", measure=measure, policy=policy, seed=int(seed))


def periodic_stream(word: Sequence[int], phase: int = 0) -> StreamSpec:
    return StreamSpec("periodic", word=tuple(word), phase=int(phase))


def make_rng(*key: int) -> np.random.Generator:
    """Counter-based generator keyed by a tuple of non-negative integers."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) & 0xFFFFFFFFFFFFFFFF for k in key])))


def draw_classes(measure: Measure, rng: np.random.Generator, n: int) -> np.ndarray:
    return np.searchsorted(measure.cdf, rng.random(n), side="right").astype(np.int64)


def generate(spec: StreamSpec, g: CompatibilityGraph, n: int, stream: int = 0) -> list[ArrivalEvent]:
    """First ``n`` events of the stream; iid streams are keyed by (seed, stream)."""
    if n < 0:
        raise InputError("negative stream length")
    if spec.kind == "periodic":
        for c in spec.word:
            g.check_vertex(c)
        k = len(spec.word)
        return [ArrivalEvent(spec.word[(spec.phase + t) % k]) for t in range(n)]

    from .policy import FCFM, draw_preference_orders

    if len(spec.measure) != g.n:
        raise InputError("measure and graph sizes differ")
    policy = spec.policy if spec.policy is not None else FCFM
    classes = draw_classes(spec.measure, make_rng(spec.seed, stream, 0), n)
    sigmas = draw_preference_orders(policy, g, make_rng(spec.seed, stream, 1), n)
    return [ArrivalEvent(int(c), s) for c, s in zip(classes, sigmas)]


def events_from_classes(classes: Iterable[int], sigma=None) -> list[ArrivalEvent]:
    return [ArrivalEvent(int(c), sigma) for c in classes]


@dataclass(frozen=True)
class Pairing:
    pairs: list
    truncated: bool  # a trailing unpaired event was dropped

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)


def pair_events(stream: Sequence[ArrivalEvent], start_parity: str = "even") -> Pairing:
    """Group consecutive events by two; odd parity skips the first event."""
    if start_parity not in ("even", "odd"):
        raise InputError(f"start_parity must be 'even' or 'odd', got {start_parity!r}")
    items = list(stream)
    if start_parity == "odd":
        items = items[1:]
    truncated = len(items) % 2 == 1
    if truncated:
        items = items[:-1]
    return Pairing([PairedEvent(items[k], items[k + 1]) for k in range(0, len(items), 2)], truncated)
