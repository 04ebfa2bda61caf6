import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matchkit.errors import UnsupportedPolicyError
from matchkit.graph import octahedron, paw
from matchkit.policy import FCFM, LCFM, ML, MS, UNIFORM, PolicySpec, PreferenceList, apply_class
from matchkit.properties import (
    check_nonexpansive,
    check_subadditive,
    l1,
    random_class_detail,
    replay_word_expansion_counterexamples,
    subadditive_sides,
    word_expansion,
)
from matchkit.input import make_rng

from conftest import ref_fcfm, ref_lcfm

G = paw()
PRIORITY = PolicySpec.priority(PreferenceList([tuple(sorted(a, reverse=True)) for a in G.adj]))


def test_ms_witness_reproduced():
    rep = check_subadditive(MS, G, trials=1, inject=[(G.parse_word("11"), G.parse_word("133224"))])
    v = rep.violations[0]
    assert (v["z1"], v["z2"], v["lhs"], v["rhs"]) == ("11", "133224", 4, [2, 0])
    assert not rep.passed


def test_ms_random_search_finds_a_violation():
    assert not check_subadditive(MS, G, trials=5000, seed=0).passed


@pytest.mark.parametrize("policy", [FCFM, LCFM, ML, UNIFORM, PRIORITY])
def test_subadditive_small_runs(policy):
    rep = check_subadditive(policy, G, trials=500, seed=7)
    assert rep.passed and rep.trials == 500


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 3), max_size=10), st.lists(st.integers(0, 3), max_size=10))
def test_subadditive_sides_match_reference(z1, z2):
    lhs, a, b = subadditive_sides(z1, z2, FCFM, G)
    assert (lhs, a, b) == tuple(len(ref_fcfm(z, G)[0]) for z in (z1 + z2, z1, z2))
    assert subadditive_sides(z1, z2, LCFM, G)[0] == len(ref_lcfm(z1 + z2, G))


def test_subadditive_is_reproducible():
    a = check_subadditive(MS, G, trials=2000, seed=3).to_json()
    b = check_subadditive(MS, G, trials=2000, seed=3).to_json()
    assert a == b


@pytest.mark.parametrize("policy", [ML, UNIFORM, PRIORITY])
def test_nonexpansive_small_runs(policy):
    assert check_nonexpansive(policy, G, trials=1000, seed=1).passed


def test_ms_expands():
    assert not check_nonexpansive(MS, G, trials=5000, seed=0).passed


def test_nonexpansive_refuses_word_policies():
    with pytest.raises(UnsupportedPolicyError):
        check_nonexpansive(FCFM, G, trials=10)


def test_nonexpansive_implies_subadditive_on_weak6():
    g = octahedron()
    for policy in [ML, UNIFORM]:
        if check_nonexpansive(policy, g, trials=500).passed:
            assert check_subadditive(policy, g, trials=500).passed


def test_random_class_details_are_admissible():
    rng = make_rng(2)
    for _ in range(300):
        x = random_class_detail(G, rng)
        assert all(0 <= c <= 10 for c in x)
        assert all(not (x[i] and x[j]) for i, j in G.edges)


def test_word_level_expansions():
    cases = replay_word_expansion_counterexamples(G)
    assert [(c.policy, c.before, c.after) for c in cases] == [("fcfm", 2, 4), ("lcfm", 2, 4)]
    assert cases[0].to_json(G)["words"] == ["133", "311"]
    # the reference FCFM gives the same images
    assert ref_fcfm(G.parse_word("2"), G, G.parse_word("133"))[0] == G.parse_word("33")
    assert ref_fcfm(G.parse_word("2"), G, G.parse_word("311"))[0] == G.parse_word("11")


def test_word_expansion_rejects_inadmissible():
    from matchkit.errors import InputError

    with pytest.raises(InputError):
        word_expansion(G.parse_word("12"), (), 0, FCFM, G)
