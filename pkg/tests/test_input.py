from fractions import Fraction

import numpy as np
import pytest

from matchkit.errors import InputError
from matchkit.input import (
    ArrivalEvent,
    Measure,
    check_ncond,
    draw_classes,
    events_from_classes,
    generate,
    iid_stream,
    make_rng,
    pair_events,
    periodic_stream,
    to_fraction,
)
from matchkit.policy import UNIFORM


def test_measure_exact(g_paw, mu_paw):
    assert mu_paw.mass([1, 3]) == Fraction(11, 20)
    assert mu_paw.to_json(g_paw) == {"1": "1/5", "2": "3/10", "3": "1/4", "4": "1/4"}
    assert Measure.from_mapping(g_paw, mu_paw.to_json(g_paw)) == mu_paw


@pytest.mark.parametrize("weights", [["1/2", "1/2", "0"], ["1/2", "1/3"], ["-1", "2"], []])
def test_measure_rejects(weights):
    with pytest.raises(InputError):
        Measure(weights)


def test_to_fraction():
    assert to_fraction(0.25) == Fraction(1, 4)
    assert to_fraction("3/10") == Fraction(3, 10)
    with pytest.raises(InputError):
        to_fraction("x")


def test_ncond_paw(g_paw, mu_paw):
    assert check_ncond(g_paw, mu_paw).satisfied
    report = check_ncond(g_paw, Measure.uniform(g_paw))
    assert not report.satisfied
    bad = {s.sorted() for s, _, _ in report.violations}
    assert (0,) in bad  # mu(1) = mu(E(1)) = 1/4


def test_ncond_k3_uniform(g_k3):
    assert check_ncond(g_k3, Measure.uniform(g_k3)).satisfied


def test_streams_deterministic(g_paw, mu_paw):
    a = generate(iid_stream(mu_paw, UNIFORM, seed=3), g_paw, 50)
    b = generate(iid_stream(mu_paw, UNIFORM, seed=3), g_paw, 50)
    c = generate(iid_stream(mu_paw, UNIFORM, seed=4), g_paw, 50)
    assert a == b and a != c
    # a longer stream extends a shorter one
    assert generate(iid_stream(mu_paw, seed=9), g_paw, 80)[:30] == generate(iid_stream(mu_paw, seed=9), g_paw, 30)


def test_draw_frequencies(mu_paw):
    x = draw_classes(mu_paw, make_rng(1), 200_000)
    freq = np.bincount(x, minlength=4) / len(x)
    assert np.allclose(freq, [0.2, 0.3, 0.25, 0.25], atol=0.005)


def test_periodic(g_weak6):
    ev = generate(periodic_stream(g_weak6.parse_word("142356"), phase=1), g_weak6, 7)
    assert "".join(g_weak6.name(e.cls) for e in ev) == "4235614"


def test_pairing():
    ev = events_from_classes([0, 1, 2, 3, 4])
    even = pair_events(ev)
    assert [(p.first.cls, p.second.cls) for p in even] == [(0, 1), (2, 3)] and even.truncated
    odd = pair_events(ev, "odd")
    assert [(p.first.cls, p.second.cls) for p in odd] == [(1, 2), (3, 4)] and not odd.truncated
    with pytest.raises(InputError):
        pair_events(ev, "middle")
