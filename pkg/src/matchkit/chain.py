"""Trajectories of the natural chain and of the detailed backwards/forwards chains.

Detailed words are tuples of ``(class, barred)`` pairs. A barred letter stands
for an item that is already matched and records the class of its partner.
Arrival positions are 0-based; items of a non-empty initial word get the
negative positions ``-len(w0) .. -1`` (oldest first).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import GuardError, InputError
from .graph import CompatibilityGraph, neighborhood
from .input import ArrivalEvent
from .policy import FCFM, PolicySpec, step_word

INCOMPLETE = "incomplete"
MAX_ENUM_LEN = 8


# -- detailed words ---------------------------------------------------------------

def letter(c: int, barred: bool = False) -> tuple[int, bool]:
    return (c, bool(barred))


def parse_detailed(g: CompatibilityGraph, text) -> tuple:
    """``"1 ~4 ~3"`` (or ``"1~4~3"`` with one-character names) -> detailed word."""
    if not isinstance(text, str):
        out = []
        for tok in text:
            tok = str(tok)
            out.append((g.index(tok[1:]), True) if tok.startswith("~") else (g.index(tok), False))
        return tuple(out)
    text = text.strip()
    if not text or text == "∅":
        return ()
    if " " in text or "," in text:
        return parse_detailed(g, [t for t in text.replace(",", " ").split() if t])
    if not all(len(v) == 1 for v in g.vertices):
        return parse_detailed(g, [text])
    out, bar = [], False
    for ch in text:
        if ch == "~":
            bar = True
            continue
        out.append((g.index(ch), bar))
        bar = False
    if bar:
        raise InputError(f"dangling bar in {text!r}")
    return tuple(out)


def detailed_tokens(g: CompatibilityGraph, w) -> list[str]:
    return [("~" if b else "") + g.name(c) for c, b in w]


def format_detailed(g: CompatibilityGraph, w) -> str:
    toks = detailed_tokens(g, w)
    if all(len(v) == 1 for v in g.vertices):
        return "".join(toks)
    return " ".join(toks)


def from_queue_word(w: Iterable[int]) -> tuple:
    return tuple((c, False) for c in w)


def transform(w, mode: str):
    """dual | reverse | restrict_V | restrict_barred."""
    w = tuple(w)
    if mode == "dual":
        return tuple((c, not b) for c, b in w)
    if mode == "reverse":
        return w[::-1]
    if mode == "restrict_V":
        return tuple(c for c, b in w if not b)
    if mode == "restrict_barred":
        return tuple((c, b) for c, b in w if b)
    raise InputError(f"unknown transform {mode!r}")


def reverse_dual(w) -> tuple:
    return tuple((c, not b) for c, b in reversed(tuple(w)))


def is_admissible_backwards(w, g: CompatibilityGraph) -> tuple[bool, Optional[str]]:
    """Admissibility of a backwards-chain state.

    The first letter must be unbarred; no two unbarred letters may be adjacent;
    an unbarred letter may not be adjacent to the class of a later barred letter.
    """
    w = tuple(w)
    if not w:
        return True, None
    if w[0][1]:
        return False, "first letter is barred"
    seen_unbarred: list[tuple[int, int]] = []
    for pos, (c, barred) in enumerate(w):
        g.check_vertex(c)
        for k, u in seen_unbarred:
            if c in g.adj[u]:
                if barred:
                    return False, f"unbarred letter at {k} is adjacent to the class of barred letter at {pos}"
                return False, f"unbarred letters at {k} and {pos} are adjacent"
        if not barred:
            seen_unbarred.append((pos, c))
    return True, None


def enumerate_admissible_backwards(g: CompatibilityGraph, max_len: int) -> list[tuple]:
    """All admissible backwards states of length <= max_len, by length then lexicographically."""
    if max_len > MAX_ENUM_LEN:
        raise GuardError(f"max_len={max_len} exceeds the enumeration guard {MAX_ENUM_LEN}")
    if max_len < 0:
        raise InputError("max_len must be non-negative")
    alphabet = [(c, b) for c in range(g.n) for b in (False, True)]
    layers = [[((), frozenset())]]
    for _ in range(max_len):
        nxt = []
        for w, blocked in layers[-1]:
            for c, b in alphabet:
                if not w and b:
                    continue
                if c in blocked:
                    continue
                nxt.append((w + ((c, b),), blocked if b else blocked | g.adj[c]))
        layers.append(nxt)
    return [w for layer in layers for w, _ in layer]


# -- matchings and trajectories --------------------------------------------------------

@dataclass(frozen=True)
class MatchingRecord:
    pairs: frozenset  # {(i, j)} with i < j
    unmatched: frozenset

    def partner_map(self) -> dict:
        out = {}
        for i, j in self.pairs:
            out[i] = j
            out[j] = i
        return out

    def validate(self, classes: dict, g: CompatibilityGraph) -> None:
        used = set()
        for i, j in self.pairs:
            if i in used or j in used:
                raise InputError(f"position used twice in matching: {(i, j)}")
            used.update((i, j))
            if classes[j] not in g.adj[classes[i]]:
                raise InputError(f"pair {(i, j)} joins incompatible classes")
        if used & set(self.unmatched):
            raise InputError("matched and unmatched positions overlap")
        if used | set(self.unmatched) != set(classes):
            raise InputError("matching does not cover every position")

    def sorted_pairs(self) -> list:
        return sorted(self.pairs)


@dataclass
class Trajectory:
    initial: tuple
    classes: list  # arrival classes, position t -> class
    words: list  # W_0 .. W_N
    matched_with: list  # partner position of arrival t at its arrival, or None
    record: MatchingRecord
    backwards: Optional[list] = None  # B_0 .. B_N
    forwards: Optional[list] = None  # F_0 .. F_N, INCOMPLETE where undetermined

    def __len__(self):
        return len(self.classes)

    @property
    def final(self) -> tuple:
        return self.words[-1]

    def position_classes(self) -> dict:
        out = {t - len(self.initial): c for t, c in enumerate(self.initial)}
        out.update(enumerate(self.classes))
        return out


def _classes(events) -> tuple[list, list]:
    classes, sigmas = [], []
    for e in events:
        if isinstance(e, ArrivalEvent):
            classes.append(e.cls)
            sigmas.append(e.sigma)
        else:
            classes.append(int(e))
            sigmas.append(None)
    return classes, sigmas


def run_natural(w0, events, policy: PolicySpec, g: CompatibilityGraph) -> Trajectory:
    """Run W_{n+1} = W_n ⊙ (V_n, Σ_n) from ``w0`` and record the matching."""
    w = tuple(w0)
    for a in w:
        g.check_vertex(a)
    if not g.is_admissible(w):
        raise InputError(f"initial word {g.format_word(w)!r} is not admissible")
    classes, sigmas = _classes(events)
    ids = list(range(-len(w), 0))
    words = [w]
    matched_with = []
    pairs = set()
    for t, (v, s) in enumerate(zip(classes, sigmas)):
        g.check_vertex(v)
        w, k = step_word(w, v, s, policy, g)
        if k is None:
            ids.append(t)
            matched_with.append(None)
        else:
            other = ids.pop(k)
            pairs.add((other, t))
            matched_with.append(other)
        words.append(w)
    record = MatchingRecord(frozenset(pairs), frozenset(ids))
    return Trajectory(tuple(words[0]), classes, words, matched_with, record)


def detailed_trajectories(events, g: CompatibilityGraph) -> Trajectory:
    """FCFM trajectory from the empty word with B_n and F_n computed offline.

    F_n needs the partners of every item present at time n; when one of them
    is matched after the end of the input, F_n is reported as ``INCOMPLETE``.
    """
    traj = run_natural((), events, FCFM, g)
    classes = traj.classes
    partner = traj.record.partner_map()
    N = len(classes)
    # matched_at[t]: time (number of arrivals) at which item t got matched
    matched_at = {}
    for i, j in traj.record.pairs:
        matched_at[i] = matched_at[j] = j + 1

    def waiting(p, n):
        return p < n and matched_at.get(p, N + 1) > n

    backwards, forwards = [()], [()]
    oldest = 0
    for n in range(1, N + 1):
        if not traj.words[n]:
            backwards.append(())
            forwards.append(())
            continue
        while not waiting(oldest, n):
            oldest += 1
        b = []
        for p in range(oldest, n):
            if waiting(p, n):
                b.append((classes[p], False))
            else:
                b.append((classes[partner[p]], True))
        backwards.append(tuple(b))
        # items waiting at time n must all have known partners
        present = [p for p in range(oldest, n) if waiting(p, n)]
        if any(p not in partner for p in present):
            forwards.append(INCOMPLETE)
            continue
        last = max(partner[p] for p in present)
        f = []
        for q in range(n, last + 1):
            mate = partner.get(q)
            if mate is not None and mate < n:
                f.append((classes[mate], True))
            else:
                f.append((classes[q], False))
        forwards.append(tuple(f))
    traj.backwards = backwards
    traj.forwards = forwards
    return traj


# -- export --------------------------------------------------------------------------

def _detailed_out(g, w):
    if w is None:
        return None
    if w == INCOMPLETE:
        return INCOMPLETE
    return detailed_tokens(g, w)


def trajectory_records(traj: Trajectory, g: CompatibilityGraph) -> list[dict]:
    """One record per arrival; step and partner numbers are 1-based arrival counts."""
    out = []
    for t, c in enumerate(traj.classes):
        n = t + 1
        mate = traj.matched_with[t]
        out.append({
            "n": n,
            "W": g.word_names(traj.words[n]),
            "B": None if traj.backwards is None else _detailed_out(g, traj.backwards[n]),
            "F": None if traj.forwards is None else _detailed_out(g, traj.forwards[n]),
            "event": g.name(c),
            "matched_with": None if mate is None else mate + 1,
        })
    return out


def trajectory_jsonl(traj: Trajectory, g: CompatibilityGraph) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in trajectory_records(traj, g))


def trajectory_csv(traj: Trajectory, g: CompatibilityGraph) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "event_class", "W", "B", "F", "matched_with"])

    def cell(x):
        if x is None:
            return ""
        if isinstance(x, str):
            return x
        return " ".join(x)

    for r in trajectory_records(traj, g):
        writer.writerow([r["n"], r["event"], cell(r["W"]), cell(r["B"]), cell(r["F"]),
                         "" if r["matched_with"] is None else r["matched_with"]])
    return buf.getvalue()


def is_fcfm_matching(classes: dict, record: MatchingRecord, g: CompatibilityGraph) -> bool:
    """Replay check: each match took the oldest compatible waiting item."""
    partner = record.partner_map()
    order = sorted(classes)
    waiting: list[int] = []
    for t in order:
        v = classes[t]
        mate = partner.get(t)
        if mate is not None and mate < t:
            first = next((p for p in waiting if classes[p] in g.adj[v]), None)
            if first != mate:
                return False
            waiting.remove(mate)
        else:
            if any(classes[p] in g.adj[v] for p in waiting):
                return False
            waiting.append(t)
    return True
