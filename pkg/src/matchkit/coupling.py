"""Even-time recursion, renovation witnesses, perfect sampling and stationary matchings.

The perfect sampler works backwards from time 0 on windows ``[-T, 0)`` with
``T`` doubling. Arrivals come in blocks of ``BLOCK`` time steps; block ``k``
covers ``[-(k+1)B, -kB)`` and is drawn from a generator keyed by
``(seed, stream, k)``, so a longer window only prepends fresh blocks.

Certification: inside the window the chain started empty at ``-T`` is run
forward. Each time it is empty at an even offset and the next arrivals spell
a verified strong erasing word, every chain started in the window from an
even admissible word loses two items (or stays empty), and between such
times sizes never grow. After ``k`` such occurrences all chains started from
words of length at most ``2k`` have merged with the empty-start chain, whose
state at 0 is returned. The sampler requires ``k >= r``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _fast
from .chain import MatchingRecord, is_fcfm_matching, run_natural
from .errors import DivergenceError, InputError, NoSampleError, UnsupportedPolicyError
from .erasing import is_strong_erasing_word, strong_erasing_library, strong_erasing_word
from .graph import CompatibilityGraph, is_bipartite
from .input import (
    ArrivalEvent,
    Measure,
    PairedEvent,
    check_ncond,
    draw_classes,
    make_rng,
    pair_events,
)
from .policy import FCFM, PolicyKind, PolicySpec, draw_preference_orders, step_word

BLOCK = 1024
DEFAULT_R = 4
DEFAULT_HORIZON_CAP = 1 << 22
LIBRARY_WORD_BUDGET = 100_000  # candidate words scanned per library length


# -- even-time chain -------------------------------------------------------------------

def even_step(u: tuple, e: PairedEvent, policy: PolicySpec, g: CompatibilityGraph) -> tuple:
    """Two arrivals at once; keeps the buffer length even."""
    u = tuple(u)
    if len(u) % 2:
        raise InputError("even-time states have even length")
    u, _ = step_word(u, e.first.cls, e.first.sigma, policy, g)
    u, _ = step_word(u, e.second.cls, e.second.sigma, policy, g)
    return u


def even_trajectory(u0, pairs: Sequence[PairedEvent], policy: PolicySpec, g: CompatibilityGraph) -> list:
    states = [tuple(u0)]
    for e in pairs:
        states.append(even_step(states[-1], e, policy, g))
    return states


@dataclass(frozen=True)
class RenovationWitness:
    hit_time: int  # paired-event index with empty state
    erasing_block: tuple  # the strong words read right after hit_time
    determined_state_time: int  # hit_time + total pairs in the block

    def to_json(self, g) -> dict:
        return {
            "hit_time": self.hit_time,
            "erasing_block": [g.format_word(z) for z in self.erasing_block],
            "determined_state_time": self.determined_state_time,
        }


def _spell(letters, start, words, r):
    """Ways to read r library words back to back from ``letters[start:]`` (first found)."""
    if r == 0:
        return ()
    for z in words:
        end = start + len(z)
        if end <= len(letters) and tuple(letters[start:end]) == z:
            rest = _spell(letters, end, words, r - 1)
            if rest is not None:
                return (z,) + rest
    return None


def scan_renovation(history: Sequence[PairedEvent], policy: PolicySpec, g: CompatibilityGraph,
                    r: int, strong_words: Sequence) -> Optional[RenovationWitness]:
    """Earliest empty hit of the empty-start even chain followed by r strong words in a row."""
    if r < 1:
        raise InputError("r must be >= 1")
    words = sorted({tuple(z) for z in strong_words}, key=lambda z: (len(z), z))
    if any(len(z) % 2 for z in words):
        raise InputError("strong erasing words have even length")
    letters = [c for e in history for c in (e.first.cls, e.second.cls)]
    u: tuple = ()
    for n in range(len(history) + 1):
        if not u:
            block = _spell(letters, 2 * n, words, r)
            if block is not None:
                m = sum(len(z) for z in block) // 2
                return RenovationWitness(n, block, n + m)
        if n < len(history):
            u = even_step(u, history[n], policy, g)
    return None


# -- strong word libraries -------------------------------------------------------------

@functools.lru_cache(maxsize=32)
def _library_cached(g: CompatibilityGraph, tag: str, policy: PolicySpec, max_len: int) -> tuple:
    found = []
    for length in range(2, max_len + 1, 2):
        if g.n ** length > LIBRARY_WORD_BUDGET:
            break
        words = strong_erasing_library(g, policy, length)
        found.extend(words)
        # one length beyond the shortest successful one is plenty
        if words and length > min(len(z) for z in found):
            break
    if not found:
        cert = strong_erasing_word(g, policy)
        if cert is not None:
            found.append(cert.word)
    return tuple(found)


def sampler_library(g: CompatibilityGraph, policy: PolicySpec, max_len: int = 8) -> tuple:
    """Verified strong erasing words used as renovation patterns.

    All words of the shortest successful length and of the next even length
    are kept while exhaustive enumeration stays under budget; otherwise the
    single word returned by :func:`strong_erasing_word`.
    """
    return _library_cached(g, policy.tag(g), policy, max_len)


# -- perfect sampling ---------------------------------------------------------------------

@dataclass
class PerfectSample:
    state: tuple
    horizon_used: int
    occurrences: int  # renovation occurrences found in the window
    seed: int
    stream: int
    criterion: str = "strong-erasing"

    @property
    def certified_size(self) -> int:
        """Initial words up to this length at -horizon_used provably give the same state."""
        return 2 * self.occurrences

    def to_json(self, g) -> dict:
        return {
            "seed": self.seed,
            "stream": self.stream,
            "state": g.format_word(self.state),
            "horizon_used": self.horizon_used,
            "occurrences": self.occurrences,
            "criterion": self.criterion,
        }


class _Blocks:
    """Suffix-consistent backwards input: block k covers [-(k+1)B, -kB)."""

    def __init__(self, g, mu, policy, seed, stream, block=BLOCK):
        self.g, self.mu, self.policy = g, mu, policy
        self.seed, self.stream, self.block = seed, stream, block
        self._classes: list[np.ndarray] = []
        self._sigmas: list[list] = []

    def _ensure(self, nblocks):
        while len(self._classes) < nblocks:
            k = len(self._classes)
            self._classes.append(draw_classes(self.mu, make_rng(self.seed, self.stream, k, 0), self.block))
            if self.policy.needs_preferences:
                self._sigmas.append(draw_preference_orders(self.policy, self.g, make_rng(self.seed, self.stream, k, 1), self.block))

    def window(self, T):
        """Arrival classes (and preferences) on [-T, 0) in forward time order."""
        nb = T // self.block
        self._ensure(nb)
        classes = np.concatenate(self._classes[nb - 1::-1]) if nb else np.zeros(0, np.int64)
        sigmas = None
        if self.policy.needs_preferences:
            sigmas = [s for k in range(nb - 1, -1, -1) for s in self._sigmas[k]]
        return classes, sigmas


def _adj_matrix(g):
    return np.array(g.adj_matrix, dtype=np.bool_)


def _scan_python(classes, sigmas, policy, g, library, need):
    lengths = sorted({len(z) for z in library})
    lib = set(library)
    N = len(classes)
    cls = classes.tolist()
    w: tuple = ()
    count, free_from, end_need = 0, 0, -1
    for t in range(N):
        if not w and t % 2 == 0 and t >= free_from:
            for L in lengths:
                if t + L > N:
                    break
                if tuple(cls[t:t + L]) in lib:
                    count += 1
                    free_from = t + L
                    if count == need:
                        end_need = t + L
                    break
        w, _ = step_word(w, cls[t], None if sigmas is None else sigmas[t], policy, g)
    return count, end_need, w


def _check_sampler_inputs(g, mu, policy, r):
    if r < 1:
        raise InputError("r must be >= 1")
    if len(mu) != g.n:
        raise InputError("measure and graph sizes differ")
    if not policy.sub_additive:
        raise UnsupportedPolicyError(f"{policy.kind.value} is not sub-additive; the sampler's certificate does not apply")
    if is_bipartite(g)[0]:
        raise DivergenceError("bipartite graphs are never stable")
    report = check_ncond(g, mu)
    if not report.satisfied:
        s = report.violations[0][0]
        raise DivergenceError(f"stability condition fails at I={{{', '.join(g.word_names(s.sorted()))}}}; refusing to sample")


class PerfectSampler:
    """Reusable sampler for one (graph, measure, policy); draws are keyed by (seed, stream)."""

    def __init__(self, g: CompatibilityGraph, mu: Measure, policy: PolicySpec = FCFM, r: int = DEFAULT_R,
                 horizon_cap: int = DEFAULT_HORIZON_CAP, library: Optional[Sequence] = None, block: int = BLOCK):
        _check_sampler_inputs(g, mu, policy, r)
        if block % 2:
            raise InputError("block size must be even")
        self.g, self.mu, self.policy, self.r = g, mu, policy, r
        self.horizon_cap = horizon_cap
        self.block = block
        if library is None:
            library = sampler_library(g, policy)
        else:
            library = tuple(tuple(z) for z in library)
            for z in library:
                if not is_strong_erasing_word(g, z, policy):
                    raise InputError(f"{g.format_word(z)!r} is not a strong erasing word")
        if not library:
            raise NoSampleError("no strong erasing word was found for this graph and policy",
                                {"policy": policy.tag(g)})
        self.library = library
        self._fast = policy.kind in (PolicyKind.FCFM, PolicyKind.LCFM)
        self._lifo = policy.kind is PolicyKind.LCFM
        self._adj = _adj_matrix(g)
        self._codes, self._lengths = _fast.library_codes(library, g.n)

    def scan(self, classes, sigmas, need=None):
        """``(occurrences, end of the need-th occurrence, state at the window end)``."""
        need = self.r if need is None else need
        if self._fast:
            count, end, _, buf = _fast.scan_window(np.ascontiguousarray(classes, dtype=np.int64), self._adj,
                                                   self._lifo, self.g.n, self._codes, self._lengths, need)
            return int(count), int(end), tuple(int(x) for x in buf)
        return _scan_python(classes, sigmas, self.policy, self.g, self.library, need)

    def at_horizon(self, T: int, seed: int, stream: int = 0, blocks: Optional[_Blocks] = None):
        """Empty-start state at 0 for the window [-T, 0) and its occurrence count."""
        if T % self.block:
            raise InputError(f"horizons are multiples of the block size {self.block}")
        blocks = blocks or _Blocks(self.g, self.mu, self.policy, seed, stream, self.block)
        classes, sigmas = blocks.window(T)
        count, _, state = self.scan(classes, sigmas)
        return state, count

    def sample(self, seed: int, stream: int = 0) -> PerfectSample:
        blocks = _Blocks(self.g, self.mu, self.policy, seed, stream, self.block)
        T = self.block
        best = 0
        while T <= self.horizon_cap:
            state, count = self.at_horizon(T, seed, stream, blocks)
            if count >= self.r:
                return PerfectSample(state, T, count, seed, stream)
            best = max(best, count)
            T *= 2
        raise NoSampleError(
            f"no certificate within horizon {self.horizon_cap}",
            {"seed": seed, "stream": stream, "horizon_cap": self.horizon_cap, "best_occurrences": best, "r": self.r},
        )


def perfect_sample(g: CompatibilityGraph, mu: Measure, policy: PolicySpec = FCFM, r: int = DEFAULT_R,
                   seed: int = 0, horizon_cap: int = DEFAULT_HORIZON_CAP, stream: int = 0) -> PerfectSample:
    """One exact draw of the even-time stationary buffer."""
    return PerfectSampler(g, mu, policy, r, horizon_cap).sample(seed, stream)


def perfect_sample_batch(g: CompatibilityGraph, mu: Measure, n: int, policy: PolicySpec = FCFM,
                         r: int = DEFAULT_R, seed: int = 0, horizon_cap: int = DEFAULT_HORIZON_CAP) -> list[PerfectSample]:
    sampler = PerfectSampler(g, mu, policy, r, horizon_cap)
    return [sampler.sample(seed, i) for i in range(n)]


def cftp_consistency(sampler: PerfectSampler, seed: int, stream: int = 0) -> tuple[bool, PerfectSample, tuple]:
    """Whether doubling the coupled horizon returns the same state."""
    s = sampler.sample(seed, stream)
    deeper, _ = sampler.at_horizon(2 * s.horizon_used, seed, stream)
    return deeper == s.state, s, deeper


# -- periodic input ----------------------------------------------------------------------

def periodic_stationary_states(word: Sequence[int], policy: PolicySpec, g: CompatibilityGraph,
                               strong_words: Sequence, r: int = 1, max_periods: int = 64) -> list[tuple]:
    """Stationary even-time buffers for a periodic input, one per pair phase.

    ``result[m]`` is the buffer just before the pair starting at letter
    ``2m mod len(word)`` (the pair period is ``len(word)`` letters when it is
    even, twice that otherwise). The witness is searched over periodic
    repetitions and the chain is read off after the determined time.
    """
    word = tuple(word)
    if not word:
        raise InputError("empty period")
    span = len(word) if len(word) % 2 == 0 else 2 * len(word)
    pairs_per_period = span // 2
    letters = [word[t % len(word)] for t in range(span * max_periods)]
    events = [ArrivalEvent(c) for c in letters]
    history = pair_events(events).pairs
    witness = scan_renovation(history, policy, g, r, strong_words)
    if witness is None:
        raise NoSampleError("no renovation witness in the scanned periods", {"periods": max_periods})
    start = witness.determined_state_time
    states = even_trajectory((), history[:start + pairs_per_period], policy, g)
    out = [None] * pairs_per_period
    for n in range(start, start + pairs_per_period):
        out[n % pairs_per_period] = states[n]
    return out


# -- stationary matchings on a window ------------------------------------------------------

@dataclass
class PerfectMatchingWindow:
    parity: str
    offset: int  # index of the first event used (0 even, 1 odd)
    length: int
    construction_points: list  # absolute times t where the buffer before arrival t is empty
    blocks: list  # (start, end, MatchingRecord) with absolute positions
    buffers: dict  # absolute time -> buffer before the arrival at that time
    incomplete: list  # (start, end) spans not matched

    def pairs(self) -> frozenset:
        return frozenset(p for _, _, rec in self.blocks for p in rec.pairs)

    def to_json(self, g) -> dict:
        return {
            "parity": self.parity,
            "construction_points": self.construction_points,
            "pairs": sorted([list(p) for p in self.pairs()]),
            "incomplete": [list(s) for s in self.incomplete],
        }


def _window(events, policy, g, parity):
    offset = 0 if parity == "even" else 1
    N = len(events)
    cls = [e.cls if isinstance(e, ArrivalEvent) else int(e) for e in events]
    sig = [e.sigma if isinstance(e, ArrivalEvent) else None for e in events]
    usable = N - offset - ((N - offset) % 2)
    end = offset + max(usable, 0)
    buffers = {}
    points = []
    w: tuple = ()
    for t in range(offset, end + 1):
        buffers[t] = w
        if not w and (t - offset) % 2 == 0:
            points.append(t)
        if t < end:
            w, _ = step_word(w, cls[t], sig[t], policy, g)
    blocks = []
    for a, b in zip(points, points[1:]):
        traj = run_natural((), [ArrivalEvent(cls[t], sig[t]) for t in range(a, b)], policy, g)
        rec = MatchingRecord(frozenset((i + a, j + a) for i, j in traj.record.pairs), frozenset())
        blocks.append((a, b, rec))
    incomplete = []
    if offset:
        incomplete.append((0, offset))
    last = points[-1] if points else offset
    if last < N:
        incomplete.append((last, N))
    return PerfectMatchingWindow(parity, offset, N, points, blocks, buffers, incomplete)


def stationary_matching_window(events, policy: PolicySpec, g: CompatibilityGraph) -> tuple[PerfectMatchingWindow, PerfectMatchingWindow]:
    """Matchings built from the even pairing and from the odd pairing (first event dropped)."""
    events = list(events)
    return _window(events, policy, g, "even"), _window(events, policy, g, "odd")


# -- reverse-time exchange ---------------------------------------------------------------------

@dataclass
class ExchangeResult:
    passed: bool
    exchanged: tuple  # (class, barred) per position
    witness: Optional[dict] = None


def exchange_and_reverse_check(classes: Sequence[int], record: MatchingRecord, g: CompatibilityGraph) -> ExchangeResult:
    """Replace each item by its partner's class, reverse time, and check that the
    original matching read backwards is exactly FCFM on the new sequence."""
    classes = list(classes)
    N = len(classes)
    pos = dict(enumerate(classes))
    if record.unmatched or {p for pair in record.pairs for p in pair} != set(range(N)):
        raise InputError("the block is not perfectly matched")
    record.validate(pos, g)
    if not is_fcfm_matching(pos, record, g):
        raise InputError("the block's matching is not FCFM")
    partner = record.partner_map()
    exchanged = tuple((classes[partner[t]], True) for t in range(N))
    reversed_classes = [exchanged[N - 1 - s][0] for s in range(N)]
    expected = {(N - 1 - j, N - 1 - i) for i, j in record.pairs}
    got = run_natural((), reversed_classes, FCFM, g).record
    if got.unmatched or set(got.pairs) != expected:
        exp_map = MatchingRecord(frozenset(expected), frozenset()).partner_map()
        got_map = got.partner_map()
        for i in range(N):
            if exp_map.get(i) != got_map.get(i):
                j = exp_map.get(i)
                k = got_map.get(i)
                witness = {"i": i, "j": j, "k": k, "l": None if k is None else exp_map.get(k)}
                return ExchangeResult(False, exchanged, witness)
    return ExchangeResult(True, exchanged)


def fcfm_blocks(classes: Sequence[int], g: CompatibilityGraph) -> list[tuple[list, MatchingRecord]]:
    """Cut an FCFM run from empty at its empty times into perfectly matched blocks."""
    out = []
    start = 0
    w: tuple = ()
    for t, v in enumerate(classes):
        w, _ = step_word(w, v, None, FCFM, g)
        if not w:
            seg = list(classes[start:t + 1])
            out.append((seg, run_natural((), seg, FCFM, g).record))
            start = t + 1
    return out


def random_fcfm_blocks(g: CompatibilityGraph, mu: Measure, count: int, seed: int = 0, chunk: int = 4096) -> list:
    blocks = []
    k = 0
    while len(blocks) < count:
        blocks.extend(fcfm_blocks(draw_classes(mu, make_rng(seed, k), chunk).tolist(), g))
        k += 1
    return blocks[:count]
