from __future__ import annotations

import pytest
from hypothesis import given

from privpart.log import END, START, Activity, Dfg, EventLog, act, df_counts, from_label, variant_counts
from strategies import logs


def edges(spec: dict) -> dict:
    out = {}
    for (x, y), w in spec.items():
        x = START if x == "▶" else act(x)
        y = END if y == "■" else act(y)
        out[(x, y)] = w
    return out


def test_df_counts_repeated_pair():
    dfg = df_counts(EventLog({("a", "b"): 2}))
    assert dict(dfg.edges) == edges({("▶", "a"): 2, ("a", "b"): 2, ("b", "■"): 2})


def test_df_counts_single_event():
    dfg = df_counts(EventLog({("a",): 1}))
    assert dict(dfg.edges) == edges({("▶", "a"): 1, ("a", "■"): 1})


def test_df_counts_hand_count():
    dfg = df_counts(EventLog([("a", "b", "c"), ("a", "c")]))
    expected = {("▶", "a"): 2, ("a", "b"): 1, ("b", "c"): 1, ("a", "c"): 1, ("c", "■"): 2}
    assert dict(dfg.edges) == edges(expected)


def test_empty_log_rejected():
    with pytest.raises(ValueError, match="empty log"):
        df_counts(EventLog())
    with pytest.raises(ValueError):
        variant_counts(EventLog())


def test_variant_counts_identity():
    log = EventLog({("a", "b"): 2, ("a",): 1})
    assert variant_counts(log) == {(act("a"), act("b")): 2, (act("a"),): 1}


def test_activity_invariants():
    with pytest.raises(ValueError):
        Activity("")
    with pytest.raises(ValueError):
        Activity("a", "suspend")
    with pytest.raises(ValueError):
        EventLog([("a", "▶")])
    with pytest.raises(ValueError):
        EventLog({("a",): 0})
    assert Activity("A", "start") != Activity("A", "complete")
    assert from_label("A+start") == Activity("A", "start")
    assert from_label("x+y") == Activity("x+y")


def test_dfg_direction_invariants():
    with pytest.raises(ValueError):
        Dfg({(act("a"), START): 1})
    with pytest.raises(ValueError):
        Dfg({(END, act("a")): 1})
    with pytest.raises(ValueError):
        Dfg({(act("a"), act("b")): -1})
    assert not Dfg({(act("a"), act("b")): 0}).edges


def test_first_appearance_order_and_totals():
    log = EventLog([("b",), ("a", "c"), ("b",)])
    assert list(log.variants) == [(act("b"),), (act("a"), act("c"))]
    assert log.total_traces == 3
    assert log.total_events == 4


@given(logs())
def test_start_and_end_weights_equal_trace_count(log):
    dfg = df_counts(log)
    assert sum(dfg.successors(START).values()) == log.total_traces
    assert sum(dfg.predecessors(END).values()) == log.total_traces
    assert sum(variant_counts(log).values()) == log.total_traces


@given(logs())
def test_flow_conservation(log):
    dfg = df_counts(log)
    for a in log.activities:
        assert sum(dfg.predecessors(a).values()) == sum(dfg.successors(a).values())


@given(logs())
def test_multiplicity_linearity(log):
    doubled = EventLog({t: 2 * m for t, m in log})
    once, twice = df_counts(log), df_counts(doubled)
    assert dict(twice.edges) == {e: 2 * w for e, w in once.edges.items()}
