"""FCFM product-form laws, their normalizing constant and exact reversibility checks.

Every identity here is verified in exact rational arithmetic. Detailed words
are tuples of ``(class, barred)`` pairs as in :mod:`matchkit.chain`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .chain import enumerate_admissible_backwards, reverse_dual, transform
from .errors import DivergenceError, GuardError, InputError, MatchkitError
from .graph import CompatibilityGraph, independent_sets, neighborhood
from .input import Measure, check_ncond, format_fraction, make_rng, draw_classes
from .policy import FCFM, PolicyKind, PolicySpec, step_word

MAX_KELLY_LEN = 6
ZERO = Fraction(0)
ONE = Fraction(1)


class KernelError(MatchkitError):
    """A transition kernel could not be built for a supposedly admissible state."""


# -- weights -----------------------------------------------------------------

def pi_b_weight(w, mu: Measure) -> Fraction:
    """Unnormalized backwards-chain weight: mu(class) for every letter, bars ignored."""
    out = ONE
    for c, _ in w:
        out *= mu[c]
    return out


def pi_w_weight(w, mu: Measure, g: CompatibilityGraph) -> Fraction:
    """prod_l mu(w_l) / mu(E({w_1..w_l}))."""
    w = tuple(w)
    if not g.is_admissible(w):
        raise InputError(f"word {g.format_word(w)!r} is not admissible")
    out = ONE
    seen: set[int] = set()
    blocked: set[int] = set()
    for a in w:
        if a not in seen:
            seen.add(a)
            blocked |= g.adj[a]
        out *= mu[a] / mu.mass(blocked)
    return out


# -- normalizing constant ------------------------------------------------------

@dataclass(frozen=True)
class _Support:
    """Independent sets as bitmasks with their per-letter constants."""

    masks: list  # shortlex order, so every subset precedes its supersets
    members: dict
    e_mass: dict  # mu(E(S))
    ratio: dict  # mu(S)/mu(E(S))


def _supports(g: CompatibilityGraph, mu: Measure) -> _Support:
    masks, members, e_mass, ratio = [], {}, {}, {}
    for s in independent_sets(g):
        m = sum(1 << i for i in s.members)
        masks.append(m)
        members[m] = tuple(sorted(s.members))
        e = mu.mass(neighborhood(g, s.members))
        e_mass[m] = e
        ratio[m] = mu.mass(s.members) / e
    return _Support(masks, members, e_mass, ratio)


def _require_ncond(g, mu):
    if len(mu) != g.n:
        raise InputError("measure and graph sizes differ")
    report = check_ncond(g, mu)
    if not report.satisfied:
        s = report.violations[0][0]
        raise DivergenceError(
            f"stability condition fails at I={{{', '.join(g.word_names(s.sorted()))}}}; the product form is not summable"
        )


def _partition(sup: _Support, mu: Measure, x: Fraction = ONE) -> Fraction:
    """Sum of x^|w| * Pi_W(w) over all admissible words, by DP over supports."""
    f = {0: ONE}
    total = ONE
    for m in sup.masks:
        rep = ONE - x * sup.ratio[m]
        if rep <= 0:
            raise DivergenceError("generating function diverges at this x")
        acc = ZERO
        for b in sup.members[m]:
            acc += f[m & ~(1 << b)] * x * mu[b] / sup.e_mass[m]
        f[m] = acc / rep
        total += f[m]
    return total


def partition_function(g: CompatibilityGraph, mu: Measure) -> Fraction:
    """Z = sum of Pi_W over every admissible word."""
    _require_ncond(g, mu)
    return _partition(_supports(g, mu), mu)


def normalizing_constant(g: CompatibilityGraph, mu: Measure) -> Fraction:
    """alpha = 1/Z."""
    return 1 / partition_function(g, mu)


def truncated_sum(g: CompatibilityGraph, mu: Measure, max_len: int) -> Fraction:
    """Sum of Pi_W over admissible words of length <= max_len, by explicit enumeration."""
    total = ZERO
    # (prefix weight, blocked classes, support, remaining length)
    stack = [(ONE, frozenset(), frozenset(), max_len)]
    while stack:
        wt, blocked, support, left = stack.pop()
        total += wt
        if not left:
            continue
        for a in range(g.n):
            if a in blocked:
                continue
            nb = blocked if a in support else blocked | g.adj[a]
            stack.append((wt * mu[a] / mu.mass(nb), nb, support | {a}, left - 1))
    return total


def tail_bound(g: CompatibilityGraph, mu: Measure, max_len: int, grid: int = 32) -> Fraction:
    """Upper bound on the Pi_W mass of words longer than max_len.

    For x > 1 with x*r(S) < 1 on every support, the tail is at most
    Z(x)/x^(max_len+1); the best x on a rational grid is returned.
    """
    _require_ncond(g, mu)
    sup = _supports(g, mu)
    rmax = max(sup.ratio.values())
    hi = 1 / rmax
    best = None
    for k in range(1, grid):
        x = 1 + (hi - 1) * Fraction(k, grid)
        bound = _partition(sup, mu, x) / x ** (max_len + 1)
        if best is None or bound < best:
            best = bound
    return best


@dataclass(frozen=True)
class Bracket:
    truncated: Fraction
    tail: Fraction
    value: Fraction

    @property
    def holds(self) -> bool:
        return self.truncated <= self.value <= self.truncated + self.tail

    def to_json(self) -> dict:
        return {
            "truncated_sum": format_fraction(self.truncated),
            "tail_bound": format_fraction(self.tail),
            "Z": format_fraction(self.value),
            "alpha": format_fraction(1 / self.value),
            "bracketed": self.holds,
        }


def bracket_partition(g: CompatibilityGraph, mu: Measure, max_len: int = 12) -> Bracket:
    return Bracket(truncated_sum(g, mu, max_len), tail_bound(g, mu, max_len), partition_function(g, mu))


def stationary_probability(w, g: CompatibilityGraph, mu: Measure, alpha: Optional[Fraction] = None) -> Fraction:
    """Stationary probability of the queue word w under FCFM."""
    if alpha is None:
        alpha = normalizing_constant(g, mu)
    return alpha * pi_w_weight(w, mu, g)


def even_time_probability(w, g: CompatibilityGraph, mu: Measure, alpha: Optional[Fraction] = None) -> Fraction:
    """Law of the buffer at even times: odd words have mass 0, even words twice their stationary mass."""
    if len(w) % 2:
        return ZERO
    return 2 * stationary_probability(w, g, mu, alpha)


def admissible_words(g: CompatibilityGraph, max_len: int) -> list[tuple]:
    """Admissible queue words by length, then lexicographically."""
    layers = [[((), frozenset())]]
    for _ in range(max_len):
        layers.append([
            (w + (a,), blocked | g.adj[a])
            for w, blocked in layers[-1]
            for a in range(g.n)
            if a not in blocked
        ])
    return [w for layer in layers for w, _ in layer]


# -- transition kernels --------------------------------------------------------------

def backward_kernel(w, g: CompatibilityGraph, mu: Measure) -> dict:
    """One FCFM step of the backwards detailed chain, built from its case analysis."""
    w = tuple(w)
    out: dict = Counter()
    if not w:
        for a in range(g.n):
            out[((a, False),)] += mu[a]
        return dict(out)
    if w[0][1]:
        raise KernelError("backwards state starts with a barred letter")
    head = w[0][0]
    for a in range(g.n):
        if a in g.adj[head]:
            # the oldest item is matched; skip to the next unmatched one
            k = next((i for i in range(1, len(w)) if not w[i][1]), None)
            nxt = () if k is None else w[k:] + ((head, True),)
        else:
            k = next((i for i in range(1, len(w)) if not w[i][1] and w[i][0] in g.adj[a]), None)
            if k is None:
                nxt = w + ((a, False),)
            else:
                nxt = w[:k] + ((a, True),) + w[k + 1:] + ((w[k][0], True),)
        out[nxt] += mu[a]
    return dict(out)


def _forward_fresh(f, head, g, mu, target, prefix_len) -> Fraction:
    """Probability that fresh arrivals extend ``target[:prefix_len]`` into ``target``,
    the last one being the partner of an item of class ``head``."""
    tail = target[prefix_len:]
    if not tail or tail[-1] != (head, True):
        return ZERO
    p = mu.mass(g.adj[head])
    for c, barred in tail[:-1]:
        if barred or c in g.adj[head]:
            return ZERO
        p *= mu[c]
    return p


def forward_probability(f, f2, g: CompatibilityGraph, mu: Measure) -> Fraction:
    """P_F(f -> f2) for the forwards detailed chain."""
    f, f2 = tuple(f), tuple(f2)
    if not f:
        if not f2:
            return ZERO
        b = f2[-1][0]
        return mu[b] * _forward_fresh(f, b, g, mu, f2, 0)
    b, barred = f[0]
    rest = f[1:]
    if barred:
        return ONE if f2 == rest else ZERO
    k = next((i for i, (c, bb) in enumerate(rest) if not bb and c in g.adj[b]), None)
    if k is not None:
        return ONE if f2 == rest[:k] + ((b, True),) + rest[k + 1:] else ZERO
    if f2[: len(rest)] != rest:
        return ZERO
    return _forward_fresh(f, b, g, mu, f2, len(rest))


def forward_targets(f, g: CompatibilityGraph, mu: Measure, max_len: int) -> dict:
    """Forward transitions from f to states of length <= max_len."""
    f = tuple(f)
    out = {}

    def fresh(prefix, head, scale):
        room = max_len - len(prefix) - 1
        p_end = mu.mass(g.adj[head])
        free = [c for c in range(g.n) if c not in g.adj[head]]
        layer = [((), ONE)]
        for _ in range(room + 1):
            nxt = []
            for cs, p in layer:
                out[prefix + cs + ((head, True),)] = scale * p * p_end
                nxt.extend((cs + ((c, False),), p * mu[c]) for c in free)
            layer = nxt

    if not f:
        for b in range(g.n):
            fresh((), b, mu[b])
        return out
    b, barred = f[0]
    rest = f[1:]
    if barred:
        return {rest: ONE}
    k = next((i for i, (c, bb) in enumerate(rest) if not bb and c in g.adj[b]), None)
    if k is not None:
        return {rest[:k] + ((b, True),) + rest[k + 1:]: ONE}
    fresh(rest, b, ONE)
    return out


@dataclass
class TransitionTable:
    states: list
    probabilities: dict  # (state, state) -> Fraction

    def row(self, w) -> dict:
        return {b: p for (a, b), p in self.probabilities.items() if a == w}

    def rows_sum_to_one(self) -> bool:
        sums = Counter()
        for (a, _), p in self.probabilities.items():
            sums[a] += p
        return all(sums[s] == 1 for s in self.states)


def backward_table(g: CompatibilityGraph, mu: Measure, max_len: int) -> TransitionTable:
    states = enumerate_admissible_backwards(g, max_len)
    probs = {}
    for w in states:
        for w2, p in backward_kernel(w, g, mu).items():
            probs[(w, w2)] = p
    return TransitionTable(states, probs)


# -- verification reports ----------------------------------------------------------

@dataclass
class IdentityReport:
    checked: int
    max_residual: Fraction
    witnesses: list = field(default_factory=list)
    label: str = "states_checked"

    @property
    def passed(self) -> bool:
        return self.max_residual == 0

    def to_json(self) -> dict:
        r = Fraction(self.max_residual)
        return {
            self.label: self.checked,
            "max_residual": format_fraction(r),
            "max_residual_num": r.numerator,
            "max_residual_den": r.denominator,
            "passed": self.passed,
            "witnesses": self.witnesses,
        }


def _guard(max_len):
    if max_len > MAX_KELLY_LEN:
        raise GuardError(f"max_len={max_len} exceeds the guard {MAX_KELLY_LEN}")
    if max_len < 0:
        raise InputError("max_len must be non-negative")


def verify_kelly(g: CompatibilityGraph, mu: Measure, max_len: int) -> IdentityReport:
    """Check Pi_B(w) P_B(w, w') = Pi_B(rd w') P_F(rd w', rd w) for every pair touching
    an admissible state of length <= max_len, in both directions."""
    _require_ncond(g, mu)
    _guard(max_len)
    from .chain import format_detailed

    states = enumerate_admissible_backwards(g, max_len)
    checked = 0
    worst = ZERO
    witnesses = []

    def record(w, w2, lhs, rhs):
        nonlocal worst
        res = abs(lhs - rhs)
        if res > worst:
            worst = res
        if res and len(witnesses) < 10:
            witnesses.append({
                "from": format_detailed(g, w), "to": format_detailed(g, w2),
                "lhs": format_fraction(lhs), "rhs": format_fraction(rhs),
            })

    for w in states:
        kernel = backward_kernel(w, g, mu)
        if sum(kernel.values()) != 1:
            raise KernelError(f"backwards row of {format_detailed(g, w)!r} does not sum to 1")
        for w2, p in kernel.items():
            lhs = pi_b_weight(w, mu) * p
            rhs = pi_b_weight(w2, mu) * forward_probability(reverse_dual(w2), reverse_dual(w), g, mu)
            record(w, w2, lhs, rhs)
            checked += 1
        # forward moves into rd(w) from every short forwards state
        f = reverse_dual(w)
        # every forward move out of rd(w) must be matched by a backward move into w
        for f2, p in forward_targets(f, g, mu, max_len + 1).items():
            src = reverse_dual(f2)
            back = backward_kernel(src, g, mu).get(w, ZERO) if _startable(src) else ZERO
            record(src, w, pi_b_weight(src, mu) * back, pi_b_weight(f, mu) * p)
            checked += 1
    return IdentityReport(checked, worst, witnesses, label="checked_pairs")


def _startable(w) -> bool:
    return not w or not w[0][1]


def verify_global_balance(g: CompatibilityGraph, mu: Measure, max_len: int, policy: PolicySpec = FCFM) -> IdentityReport:
    """Global balance of Pi_W for the natural FCFM chain on every admissible word up to max_len."""
    if policy.kind is not PolicyKind.FCFM:
        from .errors import UnsupportedPolicyError
        raise UnsupportedPolicyError("the product form is only established for FCFM")
    _require_ncond(g, mu)
    _guard(max_len)
    worst = ZERO
    witnesses = []
    states = admissible_words(g, max_len)
    for w2 in states:
        cands = set()
        if w2:
            cands.add(w2[:-1])
        for pos in range(len(w2) + 1):
            for c in range(g.n):
                cand = w2[:pos] + (c,) + w2[pos:]
                if g.is_admissible(cand):
                    cands.add(cand)
        inflow = ZERO
        for w in cands:
            pw = pi_w_weight(w, mu, g)
            for v in range(g.n):
                if step_word(w, v, None, FCFM, g)[0] == w2:
                    inflow += pw * mu[v]
        res = abs(inflow - pi_w_weight(w2, mu, g))
        if res > worst:
            worst = res
        if res and len(witnesses) < 10:
            witnesses.append({"state": g.format_word(w2), "inflow": format_fraction(inflow)})
    return IdentityReport(len(states), worst, witnesses)


@dataclass
class MarginalRow:
    word: tuple
    enumerated: Fraction  # sum over enumerated detailed words
    truncated_closed_form: Fraction
    closed_form: Fraction
    pi_w: Fraction

    @property
    def ok(self) -> bool:
        return self.enumerated == self.truncated_closed_form and self.closed_form == self.pi_w


def marginalize_check(g: CompatibilityGraph, mu: Measure, max_len: int, detail_len: Optional[int] = None) -> list[MarginalRow]:
    """Sum Pi_B over detailed words restricting to each queue word and compare with Pi_W.

    Detailed words up to ``detail_len`` letters are enumerated; the enumerated
    sum must equal the closed form truncated at that length, and the full
    closed form (a geometric series per slot) must equal Pi_W.
    """
    _require_ncond(g, mu)
    if detail_len is None:
        detail_len = min(MAX_KELLY_LEN, max_len + 2)
    if detail_len < max_len:
        raise InputError("detail_len must be at least max_len")
    sums: dict = Counter()
    for dw in enumerate_admissible_backwards(g, detail_len):
        sums[transform(dw, "restrict_V")] += pi_b_weight(dw, mu)
    rows = []
    for w in admissible_words(g, max_len):
        head = ONE
        comps = []
        blocked: set[int] = set()
        for a in w:
            blocked |= g.adj[a]
            head *= mu[a]
            comps.append(1 - mu.mass(blocked))
        # truncated: total barred letters <= detail_len - |w| spread over the slots
        budget = detail_len - len(w)
        poly = [ONE] + [ZERO] * budget
        for c in comps:
            nxt = [ZERO] * (budget + 1)
            for k in range(budget + 1):
                if poly[k]:
                    p = poly[k]
                    for j in range(budget + 1 - k):
                        nxt[k + j] += p * c ** j
            poly = nxt
        trunc = head * sum(poly)
        full = head
        for c in comps:
            full /= 1 - c
        rows.append(MarginalRow(w, sums.get(w, ZERO), trunc, full, pi_w_weight(w, mu, g)))
    return rows


# -- Monte-Carlo comparison -----------------------------------------------------------

@dataclass
class EmpiricalComparison:
    steps: int
    max_len: int
    tv: float
    frequencies: dict
    exact: dict

    def to_json(self, g) -> dict:
        return {
            "steps": self.steps,
            "max_len": self.max_len,
            "tv_distance": self.tv,
            "words": [
                {"word": g.format_word(w), "empirical": self.frequencies.get(w, 0.0), "exact": format_fraction(self.exact[w])}
                for w in sorted(self.exact, key=lambda w: (len(w), w))
            ],
        }


def empirical_comparison(g: CompatibilityGraph, mu: Measure, steps: int, burn_in: int = 1000,
                         seed: int = 0, max_len: int = 3) -> EmpiricalComparison:
    """Simulate FCFM from empty and compare state frequencies with alpha*Pi_W.

    The total-variation distance counts words of length <= max_len one by one
    and lumps all longer words into a single remainder cell.
    """
    alpha = normalizing_constant(g, mu)
    exact = {w: alpha * pi_w_weight(w, mu, g) for w in admissible_words(g, max_len)}
    arrivals = draw_classes(mu, make_rng(seed, 0xE3, 0), burn_in + steps).tolist()
    counts: Counter = Counter()
    w: tuple = ()
    for t, v in enumerate(arrivals):
        w = step_word(w, v, None, FCFM, g)[0]
        if t >= burn_in and len(w) <= max_len:
            counts[w] += 1
    freq = {k: c / steps for k, c in counts.items()}
    tv = sum(abs(freq.get(k, 0.0) - float(p)) for k, p in exact.items())
    tv += abs((1 - sum(freq.values())) - float(1 - sum(exact.values())))
    return EmpiricalComparison(steps, max_len, tv / 2, freq, exact)
