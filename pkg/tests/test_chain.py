import csv
import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matchkit.chain import (
    INCOMPLETE,
    detailed_trajectories,
    enumerate_admissible_backwards,
    format_detailed,
    from_queue_word,
    is_admissible_backwards,
    is_fcfm_matching,
    parse_detailed,
    reverse_dual,
    run_natural,
    trajectory_csv,
    trajectory_jsonl,
    transform,
)
from matchkit.errors import GuardError, InputError
from matchkit.graph import complete, paw
from matchkit.policy import FCFM, LCFM, ML

from conftest import edge_set, ref_fcfm

G = paw()
GOLDEN = "13423132214"
GOLDEN_W = ["1", "13", "1", "", "3", "31", "313", "13", "3", "31", "1"]
GOLDEN_B = {3: "1~4~3", 7: "313", 8: "13~3"}
GOLDEN_F = {1: "34~1", 2: "~3~1", 3: "~1", 5: "13~3", 6: "3~3~1", 7: "~3~11~3", 8: "~11~3"}


def golden_run():
    return detailed_trajectories(G.parse_word(GOLDEN), G)


def test_golden_natural_chain():
    traj = golden_run()
    assert [G.format_word(w) for w in traj.words[1:]] == GOLDEN_W


def test_golden_detailed_chains():
    traj = golden_run()
    for n, text in GOLDEN_B.items():
        assert traj.backwards[n] == parse_detailed(G, text), n
    for n, text in GOLDEN_F.items():
        assert traj.forwards[n] == parse_detailed(G, text), n
    assert traj.forwards[10] == INCOMPLETE and traj.forwards[11] == INCOMPLETE
    assert traj.backwards[4] == () and traj.forwards[4] == ()


def test_golden_restrictions():
    # unbarred letters of B_n spell W_n; barred letters of F_n are the same items
    traj = golden_run()
    for n in range(1, 10):
        assert transform(traj.backwards[n], "restrict_V") == traj.words[n]
        barred = [c for c, _ in transform(traj.forwards[n], "restrict_barred")]
        assert sorted(barred) == sorted(traj.words[n])


def test_detailed_parsing():
    w = parse_detailed(G, "1~4~3")
    assert w == ((0, False), (3, True), (2, True))
    assert format_detailed(G, w) == "1~4~3"
    assert parse_detailed(G, ["1", "~4"]) == w[:2]
    assert transform(w, "dual") == ((0, True), (3, False), (2, False))
    assert transform(w, "restrict_barred") == w[1:]
    assert reverse_dual(w) == ((2, False), (3, False), (0, True))
    assert from_queue_word((0, 2)) == ((0, False), (2, False))
    with pytest.raises(InputError):
        transform(w, "flip")


def test_admissible_backwards():
    assert is_admissible_backwards(parse_detailed(G, "1~4~3"), G)[0]
    ok, why = is_admissible_backwards(parse_detailed(G, "~13"), G)
    assert not ok and "first" in why
    assert not is_admissible_backwards(parse_detailed(G, "12"), G)[0]
    assert not is_admissible_backwards(parse_detailed(G, "1~2"), G)[0]


def test_enumeration_k3():
    k3 = complete(3)
    got = enumerate_admissible_backwards(k3, 2)
    # every admissible word of length <= 2 over {a, ~a}, checked against the predicate
    assert len(got) == 10  # ∅, three of a, three of aa, three of a~a
    brute = []
    for c in range(3):
        brute.append(((c, False),))
    for c in range(3):
        for d in range(3):
            for b in (False, True):
                w = ((c, False), (d, b))
                if is_admissible_backwards(w, k3)[0]:
                    brute.append(w)
    assert set(got) == {()} | set(brute)
    assert ((0, False), (0, False)) in got
    with pytest.raises(GuardError):
        enumerate_admissible_backwards(k3, 9)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(0, 3), max_size=40).map(tuple))
def test_detailed_chain_invariants(seq):
    traj = detailed_trajectories(seq, G)
    for n, b in enumerate(traj.backwards):
        assert is_admissible_backwards(b, G)[0]
        assert transform(b, "restrict_V") == traj.words[n]
        f = traj.forwards[n]
        if f != INCOMPLETE:
            assert sorted(c for c, _ in transform(f, "restrict_barred")) == sorted(traj.words[n])


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(0, 3), max_size=40).map(tuple), st.sampled_from([FCFM, LCFM, ML]))
def test_run_natural_matchings(seq, policy):
    traj = run_natural((), seq, policy, G)
    classes = traj.position_classes()
    traj.record.validate(classes, G)
    E = edge_set(G)
    assert all(frozenset((classes[i], classes[j])) in E for i, j in traj.record.pairs)
    assert tuple(classes[p] for p in sorted(traj.record.unmatched)) == traj.final
    assert is_fcfm_matching(classes, traj.record, G) == _same_as_fcfm(seq, traj)
    if policy is FCFM:
        assert _same_as_fcfm(seq, traj)


def _same_as_fcfm(seq, traj):
    return sorted(ref_fcfm(seq, G)[1]) == traj.record.sorted_pairs()


def test_initial_word_positions():
    traj = run_natural(G.parse_word("13"), G.parse_word("2"), FCFM, G)
    assert traj.matched_with == [-2]
    assert traj.final == (2,)
    with pytest.raises(InputError):
        run_natural(G.parse_word("12"), (), FCFM, G)


def test_exports():
    traj = golden_run()
    rows = [json.loads(line) for line in trajectory_jsonl(traj, G).splitlines()]
    assert len(rows) == 11
    assert rows[2] == {"n": 3, "W": ["1"], "B": ["1", "~4", "~3"], "F": ["~1"], "event": "4", "matched_with": 2}
    assert rows[10]["F"] == INCOMPLETE
    table = list(csv.reader(io.StringIO(trajectory_csv(traj, G))))
    assert table[0] == ["n", "event_class", "W", "B", "F", "matched_with"]
    assert table[3] == ["3", "4", "1", "1 ~4 ~3", "~1", "2"]
