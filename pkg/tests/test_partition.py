from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from privpart.hierarchy import AbstractionHierarchy, HierarchyError
from privpart.log import Activity, EventLog, act
from privpart.logio import read_log
from privpart.partition import compress, flatten, partition, write_partition
from strategies import contiguous_log, interleaved_log, two_level_hierarchy

H_AB = AbstractionHierarchy({"a": "A", "b": "A", "c": "A", "d": "B", "e": "B", "f": "B", "A": "⊤", "B": "⊤"})


def s(name):
    return Activity(name, "start")


def c(name):
    return Activity(name, "complete")


def t(*xs):
    return tuple(act(x) if isinstance(x, str) else x for x in xs)


def test_running_example():
    result = partition(EventLog([tuple("abcdef")]), H_AB)
    assert list(result.abstracted_log.variants) == [(s("A"), c("A"), s("B"), c("B"))]
    assert dict(result.sub_logs[act("A")].variants) == {t("a", "b", "c"): 1}
    assert dict(result.sub_logs[act("B")].variants) == {t("d", "e", "f"): 1}
    assert [pid for pid, _ in result.parts()] == ["abstracted", "sub_A", "sub_B"]


def test_unmapped_trace_unchanged():
    result = partition(EventLog([("x", "y")]), H_AB)
    assert list(result.abstracted_log.variants) == [t("x", "y")]
    assert result.sub_logs == {}


def test_interleaving_with_unmapped_event():
    h = AbstractionHierarchy({"a": "A", "b": "A", "A": "⊤"})
    result = partition(EventLog([("a", "d", "b")]), h)
    assert list(result.abstracted_log.variants) == [(s("A"), act("d"), c("A"))]
    assert list(result.sub_logs[act("A")].variants) == [t("a", "b")]


def test_single_occurrence_is_complete_only():
    h = AbstractionHierarchy({"a": "A", "A": "⊤"})
    result = partition(EventLog([("x", "a")]), h)
    assert list(result.abstracted_log.variants) == [(act("x"), c("A"))]


def test_repeated_execution_merges_into_one_subtrace():
    h = AbstractionHierarchy({"a": "A", "b": "A", "A": "⊤"})
    result = partition(EventLog([("a", "b", "d", "a", "b")]), h)
    assert list(result.sub_logs[act("A")].variants) == [t("a", "b", "a", "b")]
    assert list(result.abstracted_log.variants) == [(s("A"), act("d"), c("A"))]


def test_multiplicities_carry_through():
    result = partition(EventLog({tuple("abcdef"): 4, tuple("ad"): 2}), H_AB)
    assert result.abstracted_log.total_traces == 6
    assert result.sub_logs[act("A")].variants[t("a", "b", "c")] == 4


def test_invalid_hierarchy_rejected():
    with pytest.raises(HierarchyError):
        partition(EventLog([("a",)]), AbstractionHierarchy({"a": "A", "A": "a"}))


def test_compress_examples():
    A, B = act("A"), act("B")
    assert compress((A, A, A, B)) == (A, A, B)
    assert compress((A,)) == (A,)
    assert compress((A, B, A, B)) == (A, B, A, B)


def test_flatten_examples():
    log = EventLog([tuple("abcdef")])
    assert flatten(partition(log, H_AB)) == log
    assert flatten(partition(log, AbstractionHierarchy())) == log
    h = AbstractionHierarchy({"a": "A", "b": "A", "A": "⊤"})
    assert list(flatten(partition(EventLog([("a", "d", "b")]), h)).variants) == [t("a", "b", "d")]


def test_multi_level_partition_and_flatten():
    h = AbstractionHierarchy({"a": "A", "b": "A", "c": "C", "A": "X", "C": "X", "X": "⊤"})
    log = EventLog({("a", "b", "c"): 2, ("c",): 1})
    result = partition(log, h)
    assert set(result.sub_logs) == {act("A"), act("C"), act("X")}
    assert list(result.abstracted_log.variants) == [(s("X"), c("X")), (c("X"),)]
    assert flatten(result) == log


def test_write_partition(tmp_path):
    paths = write_partition(partition(EventLog([tuple("abcdef")]), H_AB), tmp_path)
    assert [p.rsplit("/", 1)[1] for p in paths] == ["abstracted.xes", "sub_A.xes", "sub_B.xes"]
    back = read_log(paths[0], keep_lifecycle=True)
    assert list(back.variants) == [(s("A"), c("A"), s("B"), c("B"))]



@given(st.integers(0, 2**32 - 1))
def test_roundtrip_on_contiguous_logs(seed):
    h = two_level_hierarchy()
    log = contiguous_log(np.random.default_rng(seed))
    assert flatten(partition(log, h)) == log


@given(st.integers(0, 2**32 - 1))
def test_conservation_and_projection_on_interleaved_logs(seed):
    h = two_level_hierarchy()
    log = interleaved_log(np.random.default_rng(seed))
    result = partition(log, h)
    unmapped = sum(m * sum(1 for a in tr if a.lifecycle == "atomic") for tr, m in result.abstracted_log)
    in_subs = sum(sub.total_events for sub in result.sub_logs.values())
    assert unmapped + in_subs == log.total_events
    for rec in result.provenance:
        for alpha, sub in rec.pieces:
            assert sub == tuple(a for a in rec.original if h.abstract(a) == alpha)
        for alpha in {a.name for a in rec.abstracted if a.lifecycle != "atomic"}:
            labels = [a.lifecycle for a in rec.abstracted if a.name == alpha]
            assert labels in (["complete"], ["start", "complete"])
