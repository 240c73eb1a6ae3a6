from __future__ import annotations

import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from privpart.hierarchy import (
    AbstractionHierarchy,
    HierarchyError,
    abstract,
    derive_cooccurrence,
    derive_random,
    parse_mapping,
    proximity,
    validate,
    write_mapping,
)
from privpart.log import ROOT, Activity, EventLog, act
from strategies import logs

A, B = act("A"), act("B")


def groups(h: AbstractionHierarchy) -> set[frozenset[str]]:
    return {frozenset(a.name for a in h.members(alpha)) for alpha in h.high_level()}


def test_valid_two_level():
    assert validate(AbstractionHierarchy({"a": "A", "A": "⊤"})) == []


def test_cycle_reported():
    (v,) = validate(AbstractionHierarchy({"a": "A", "A": "a"}))
    assert v.kind == "cycle"
    assert set(v.activities) == {A, act("a")}
    assert "cycle" in str(v)


def test_unrooted_reported():
    (v,) = validate(AbstractionHierarchy({"a": "A"}))
    assert v.kind == "unrooted" and v.activities == (A,)


def test_self_abstraction_reported():
    kinds = {v.kind for v in validate(AbstractionHierarchy({"a": "a"}))}
    assert "self" in kinds


def test_abstract_lookups():
    h = AbstractionHierarchy({"a": "A", "b": "A", "c": "A", "A": "⊤"})
    assert abstract(h, act("a")) == A
    assert abstract(h, act("zzz")) is None
    assert abstract(h, ROOT) == ROOT
    assert abstract(h, Activity("a", "start")) == A


def test_random_single_cluster():
    h = derive_random({act("a"), act("b")}, 1, seed=3)
    assert dict(h.parent) == {act("a"): act("G_1"), act("b"): act("G_1"), act("G_1"): ROOT}


def test_random_singletons_and_range():
    universe = {act(x) for x in "abcd"}
    h = derive_random(universe, 4, seed=0)
    assert all(len(g) == 1 for g in groups(h)) and len(groups(h)) == 4
    with pytest.raises(ValueError):
        derive_random(universe, 5, seed=0)
    with pytest.raises(ValueError):
        derive_random(universe, 0, seed=0)


def test_random_deterministic():
    universe = {act(x) for x in "abcdefgh"}
    assert derive_random(universe, 3, 11) == derive_random(universe, 3, 11)


def test_cooccurrence_adjacency_example():
    log = EventLog({tuple("abcd"): 10})
    prox = proximity(log, 1)
    assert prox[(act("a"), act("b"))] == prox[(act("b"), act("c"))] == 10
    assert groups(derive_cooccurrence(log, 2, 1)) == {frozenset("ab"), frozenset("cd")}


def test_cooccurrence_one_cluster_and_range():
    log = EventLog({tuple("abcd"): 1})
    assert groups(derive_cooccurrence(log, 1)) == {frozenset("abcd")}
    with pytest.raises(ValueError):
        derive_cooccurrence(log, 5)


def test_never_cooccurring_merged_last():
    log = EventLog({("a", "b"): 5, ("c", "d"): 5, ("e",): 1})
    assert groups(derive_cooccurrence(log, 3)) == {frozenset("ab"), frozenset("cd"), frozenset("e")}


def test_parse_mapping_example():
    h = parse_mapping(io.StringIO("a,A\nb,A\nA,⊤"))
    assert dict(h.parent) == {act("a"): A, act("b"): A, A: ROOT}


def test_parse_mapping_cycle_is_error():
    with pytest.raises(HierarchyError, match="cycle"):
        parse_mapping(io.StringIO("a,A\nA,a\n"))


def test_parse_mapping_empty_file():
    assert len(parse_mapping(io.StringIO(""))) == 0


def test_mapping_roundtrip(tmp_path):
    h = AbstractionHierarchy({"a": "A", "b": "A", "A": "⊤", "c": "B", "B": "⊤"})
    path = tmp_path / "h.csv"
    write_mapping(h, path)
    assert parse_mapping(path) == h


def test_levels_of_three_level_hierarchy():
    h = AbstractionHierarchy({"a": "A", "b": "A", "A": "X", "c": "C", "C": "X", "X": "⊤"})
    assert validate(h) == []
    levels = h.levels()
    assert levels[0] == {act("a"): A, act("b"): A, act("c"): act("C")}
    assert levels[1] == {A: act("X"), act("C"): act("X")}


@given(logs("abcdef"), st.integers(1, 6), st.integers(0, 2**16))
def test_derived_hierarchies_are_valid(log, k, seed):
    acts = log.activities
    k = min(k, len(acts))
    for h in (derive_random(acts, k, seed), derive_cooccurrence(log, k, 1 + seed % 3)):
        assert validate(h, acts) == []
        assert len(h.high_level()) == k
        for a in acts:
            steps, cur = 0, a
            while cur != ROOT:
                cur = h.abstract(cur)
                steps += 1
                assert steps <= len(acts) + 1
        assert derive_cooccurrence(log, k, 1) == derive_cooccurrence(log, k, 1)
