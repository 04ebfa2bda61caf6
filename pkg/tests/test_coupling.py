from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matchkit.chain import MatchingRecord, format_detailed, run_natural
from matchkit.coupling import (
    PerfectSampler,
    _Blocks,
    cftp_consistency,
    even_step,
    even_trajectory,
    exchange_and_reverse_check,
    fcfm_blocks,
    periodic_stationary_states,
    random_fcfm_blocks,
    sampler_library,
    scan_renovation,
    stationary_matching_window,
)
from matchkit.errors import DivergenceError, InputError, NoSampleError, UnsupportedPolicyError
from matchkit.graph import complete, cycle_graph, octahedron, paw
from matchkit.input import Measure, events_from_classes, generate, iid_stream, make_rng, pair_events, periodic_stream
from matchkit.policy import FCFM, LCFM, MS, UNIFORM

from conftest import PAW_MU, random_admissible_even, ref_fcfm

G = paw()
MU = Measure(PAW_MU)
W6 = octahedron()
K3 = complete(3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 3), max_size=40))
def test_even_step_keeps_parity(seq):
    pairs = pair_events(events_from_classes(seq)).pairs
    for u in even_trajectory((), pairs, FCFM, G):
        assert len(u) % 2 == 0 and G.is_admissible(u)


def test_even_step_rejects_odd_state():
    e = pair_events(events_from_classes([0, 1])).pairs[0]
    with pytest.raises(InputError):
        even_step((0,), e, FCFM, G)


def test_libraries_hold_strong_words():
    lib = sampler_library(G, FCFM)
    assert lib and all(len(z) % 2 == 0 for z in lib)
    from matchkit.erasing import is_strong_erasing_word

    for z in lib[:: max(1, len(lib) // 25)]:
        assert is_strong_erasing_word(G, z, FCFM)


def test_renovation_witness_determines_the_state():
    lib = sampler_library(G, FCFM)
    events = generate(iid_stream(MU, seed=4), G, 40000)
    history = pair_events(events).pairs
    r = 2
    wit = scan_renovation(history, FCFM, G, r, lib)
    assert wit is not None and len(wit.erasing_block) == r
    letters = [e.cls for e in events[: 2 * wit.determined_state_time]]
    target = ref_fcfm(letters, G)[0]
    rng = make_rng(8)
    for _ in range(50):
        y = random_admissible_even(G, rng, max_len=2 * r, nonempty=False)
        assert ref_fcfm(letters, G, y)[0] == target


def test_sampler_certificate_by_reference_replay():
    # the window's empty-start state is reached from every initial word up to 2 * occurrences
    sampler = PerfectSampler(G, MU)
    rng = make_rng(9)
    for seed in range(5):
        s = sampler.sample(seed)
        classes, _ = _Blocks(G, MU, FCFM, seed, 0).window(s.horizon_used)
        letters = classes.tolist()
        assert ref_fcfm(letters, G)[0] == s.state
        for _ in range(20):
            y = random_admissible_even(G, rng, max_len=s.certified_size, nonempty=False)
            assert ref_fcfm(letters, G, y)[0] == s.state


def test_sampler_is_deterministic_and_consistent():
    sampler = PerfectSampler(G, MU)
    assert sampler.sample(1, 3) == sampler.sample(1, 3)
    for seed in range(30):
        ok, s, deeper = cftp_consistency(sampler, seed)
        assert ok, (seed, s, deeper)
        assert len(s.state) % 2 == 0


def test_k3_small_batch():
    sampler = PerfectSampler(K3, Measure.uniform(K3))
    empty = sum(not sampler.sample(0, i).state for i in range(2000))
    assert abs(empty / 2000 - 0.5) < 0.04


def test_lcfm_and_uniform_samplers_run():
    for policy in [LCFM, UNIFORM]:
        s = PerfectSampler(K3, Measure.uniform(K3), policy).sample(2)
        assert len(s.state) % 2 == 0


def test_sampler_refusals():
    with pytest.raises(UnsupportedPolicyError):
        PerfectSampler(G, MU, MS)
    with pytest.raises(DivergenceError):
        PerfectSampler(G, Measure.uniform(G))
    c4 = cycle_graph(4)
    with pytest.raises(DivergenceError):
        PerfectSampler(c4, Measure.uniform(c4))
    with pytest.raises(InputError):
        PerfectSampler(G, MU, library=[G.parse_word("1313")])
    with pytest.raises(NoSampleError) as err:
        PerfectSampler(G, MU, r=50, horizon_cap=2048).sample(0)
    assert err.value.diagnostics["horizon_cap"] == 2048


def test_weak6_periodic_states():
    states = periodic_stationary_states(W6.parse_word("142356"), FCFM, W6, [W6.parse_word("142356")])
    assert [W6.format_word(u) for u in states] == ["", "14", ""]


def test_weak6_windows():
    events = generate(periodic_stream(W6.parse_word("142356")), W6, 60)
    even, odd = stationary_matching_window(events, FCFM, W6)
    assert [W6.format_word(even.buffers[t]) for t in range(6)] == ["", "1", "14", "4", "", "5"]
    assert [W6.format_word(odd.buffers[t]) for t in range(6, 12)] == ["6", "", "4", "", "3", ""]
    assert even.pairs() != odd.pairs()
    assert odd.incomplete[0] == (0, 1)


def test_exchange_example_block():
    classes = G.parse_word("134231322142")
    rec = run_natural((), classes, FCFM, G).record
    res = exchange_and_reverse_check(classes, rec, G)
    assert res.passed
    assert format_detailed(G, res.exchanged) == "~2~4~3~1~2~2~4~3~1~2~3~1"


def test_exchange_on_random_blocks():
    for classes, rec in random_fcfm_blocks(G, MU, 200, seed=1):
        assert exchange_and_reverse_check(classes, rec, G).passed


def test_exchange_rejects_non_fcfm_blocks():
    classes = G.parse_word("1322")  # FCFM pairs (0,2) and (1,3); the crossed pairing is not FCFM
    rec = MatchingRecord(frozenset({(0, 3), (1, 2)}), frozenset())
    with pytest.raises(InputError):
        exchange_and_reverse_check(classes, rec, G)
    with pytest.raises(InputError):
        exchange_and_reverse_check(G.parse_word("12"), MatchingRecord(frozenset(), frozenset({0, 1})), G)


def test_fcfm_blocks_partition_the_run():
    classes = G.parse_word("134231322142")
    blocks = fcfm_blocks(classes, G)
    assert sum(len(c) for c, _ in blocks) == len(classes)
