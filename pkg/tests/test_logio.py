from __future__ import annotations

import gzip
import io

import pytest
from hypothesis import given

from privpart.log import END, START, Activity, EventLog, act, df_counts
from privpart.logio import (
    CsvSchema,
    LogFormatError,
    parse_csv,
    parse_xes,
    read_dfg,
    read_log,
    write_csv,
    write_dfg,
    write_xes,
)
from strategies import logs

MINIMAL = b"""<?xml version="1.0" encoding="UTF-8"?>
<log xes.version="1.0">
  <trace>
    <string key="concept:name" value="case-1"/>
    <event><string key="concept:name" value="a"/><string key="lifecycle:transition" value="start"/></event>
    <event><string key="concept:name" value="b"/></event>
  </trace>
</log>
"""


def xes_roundtrip(log, keep_lifecycle=False):
    buf = io.BytesIO()
    write_xes(log, buf)
    return parse_xes(io.BytesIO(buf.getvalue()), keep_lifecycle=keep_lifecycle), buf.getvalue()


def test_minimal_xes_ignores_lifecycle_on_raw_import():
    log = parse_xes(io.BytesIO(MINIMAL))
    assert dict(log.variants) == {(act("a"), act("b")): 1}


def test_malformed_xml_reports_line():
    bad = b"<log>\n<trace>\n<event>\n</log>"
    with pytest.raises(LogFormatError, match="line"):
        parse_xes(io.BytesIO(bad))


def test_missing_concept_name_names_trace():
    doc = b"<log><trace><event><string key='concept:name' value='a'/></event></trace>" \
          b"<trace><event><string key='org:resource' value='r'/></event></trace></log>"
    with pytest.raises(LogFormatError, match="trace 1"):
        parse_xes(io.BytesIO(doc))


def test_empty_trace_rejected():
    with pytest.raises(LogFormatError):
        parse_xes(io.BytesIO(b"<log><trace></trace></log>"))


def test_xes_multiplicity_expands_to_trace_elements():
    _, raw = xes_roundtrip(EventLog({("a",): 3}))
    assert raw.count(b"<trace") == 3


def test_xes_roundtrip_single():
    log = EventLog({("a",): 1})
    assert xes_roundtrip(log)[0].variants == log.variants


def test_lifecycle_roundtrip_for_partition_output():
    log = EventLog([(Activity("A", "start"), act("d"), Activity("A", "complete"))])
    back, raw = xes_roundtrip(log, keep_lifecycle=True)
    assert b"lifecycle:transition" in raw
    assert back.variants == log.variants


def test_gzip_input(tmp_path):
    path = tmp_path / "log.xes.gz"
    path.write_bytes(gzip.compress(MINIMAL))
    assert read_log(path).total_traces == 1


def test_csv_two_rows():
    text = "case,activity,order\n1,a,1\n1,b,2\n"
    assert dict(parse_csv(io.StringIO(text)).variants) == {(act("a"), act("b")): 1}


def test_csv_sorted_by_timestamp():
    text = "case,activity,order\n1,b,2024-01-02T10:00:00\n1,a,2024-01-01T10:00:00\n"
    assert list(parse_csv(io.StringIO(text)).variants) == [(act("a"), act("b"))]


def test_csv_ties_keep_file_order():
    text = "case,activity,order\n1,b,5\n1,a,5\n"
    assert list(parse_csv(io.StringIO(text)).variants) == [(act("b"), act("a"))]


def test_csv_errors():
    with pytest.raises(LogFormatError, match="order"):
        parse_csv(io.StringIO("case,activity\n1,a\n"))
    with pytest.raises(LogFormatError, match="data row 2"):
        parse_csv(io.StringIO("case,activity,order\n1,a,1\n1,b,tomorrow-ish\n"))


def test_csv_schema_and_delimiter():
    schema = CsvSchema("cid", "task", "ts", ";")
    text = "cid;task;ts\nx;a;1\nx;b;2\ny;a;1\n"
    log = parse_csv(io.StringIO(text), schema)
    assert log.total_traces == 2
    with pytest.raises(ValueError):
        CsvSchema("c", "c", "t")


@given(logs())
def test_xes_roundtrip_property(log):
    assert xes_roundtrip(log)[0].variants == log.variants


@given(logs())
def test_csv_roundtrip_property(log):
    buf = io.StringIO()
    write_csv(log, CsvSchema(), buf)
    assert parse_csv(io.StringIO(buf.getvalue())).variants == log.variants


def test_thousand_trace_random_roundtrip(tmp_path):
    import numpy as np

    rng = np.random.default_rng(7)
    traces = [tuple(rng.choice(list("abcdefg"), size=rng.integers(1, 12))) for _ in range(1000)]
    log = EventLog(traces)
    write_xes(log, tmp_path / "x.xes")
    write_csv(log, CsvSchema(), tmp_path / "x.csv")
    assert read_log(tmp_path / "x.xes").variants == log.variants
    assert read_log(tmp_path / "x.csv").variants == log.variants


def test_parsing_is_order_deterministic():
    log = EventLog([("c",), ("a", "b"), ("c",), ("b",)])
    _, raw = xes_roundtrip(log)
    first = parse_xes(io.BytesIO(raw))
    second = parse_xes(io.BytesIO(raw))
    assert list(first.variants.items()) == list(second.variants.items())


def test_dfg_csv_roundtrip():
    dfg = df_counts(EventLog([("a", "b"), ("a",)]))
    buf = io.StringIO()
    write_dfg(dfg, buf)
    assert "▶" in buf.getvalue() and "■" in buf.getvalue()
    back = read_dfg(io.StringIO(buf.getvalue()))
    assert back == dfg
    assert back.weight(START, act("a")) == 2 and back.weight(act("a"), END) == 1
    with pytest.raises(LogFormatError):
        read_dfg(io.StringIO("source,target\na,b\n"))
