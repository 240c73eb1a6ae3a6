"""XES and CSV reading/writing for :class:`~privpart.log.EventLog`."""

from __future__ import annotations

import csv
import gzip
import io
import os
from dataclasses import dataclass
from datetime import datetime
from typing import IO, Optional
from xml.etree import ElementTree as ET
from xml.sax.saxutils import quoteattr

from privpart.log import ATOMIC, COMPLETE_LC, END, START, START_LC, Activity, Dfg, EventLog, from_label

CONCEPT_NAME = "concept:name"
LIFECYCLE = "lifecycle:transition"


class LogFormatError(ValueError):
    """Raised for malformed or semantically invalid input files."""


@dataclass(frozen=True)
class CsvSchema:
    case_column: str = "case"
    activity_column: str = "activity"
    order_column: str = "order"
    delimiter: str = ","
    lifecycle_column: Optional[str] = None

    def __post_init__(self) -> None:
        cols = [self.case_column, self.activity_column, self.order_column]
        if any(not c for c in cols):
            raise ValueError("CSV column names must be non-empty")
        if len(set(cols)) != 3:
            raise ValueError("case, activity and order columns must be distinct")
        if len(self.delimiter) != 1:
            raise ValueError("delimiter must be a single character")


def _open_binary(source) -> IO[bytes]:
    if isinstance(source, (str, os.PathLike)):
        fh = open(source, "rb")
    elif isinstance(source, bytes):
        fh = io.BytesIO(source)
    else:
        fh = source
    head = fh.peek(2)[:2] if hasattr(fh, "peek") else b""
    if head == b"\x1f\x8b":
        return gzip.GzipFile(fileobj=fh)
    return fh


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_xes(source, keep_lifecycle: bool = False) -> EventLog:
    """Read an XES document (plain or gzip) into an event log.

    Only ``concept:name`` of each event is used.  ``lifecycle:transition`` is
    honoured when ``keep_lifecycle`` is set and its value is ``start`` or
    ``complete``; everything else becomes an atomic activity.
    """
    fh = _open_binary(source)
    traces: list[tuple[Activity, ...]] = []
    current: Optional[list[Activity]] = None
    depth_event = 0
    trace_index = -1
    try:
        for kind, elem in ET.iterparse(fh, events=("start", "end")):
            tag = _local(elem.tag)
            if kind == "start":
                if tag == "trace":
                    current = []
                    trace_index += 1
                elif tag == "event":
                    depth_event += 1
                continue
            if tag == "event":
                depth_event -= 1
                if current is None:
                    elem.clear()
                    continue
                name = None
                lifecycle = ATOMIC
                for child in elem:
                    key = child.get("key")
                    if key == CONCEPT_NAME:
                        name = child.get("value")
                    elif key == LIFECYCLE and keep_lifecycle:
                        value = (child.get("value") or "").lower()
                        if value in (START_LC, COMPLETE_LC):
                            lifecycle = value
                if not name:
                    raise LogFormatError(
                        f"event without {CONCEPT_NAME} in trace {trace_index}"
                    )
                current.append(Activity(name, lifecycle))
                elem.clear()
            elif tag == "trace":
                if not current:
                    raise LogFormatError(f"trace {trace_index} has no events")
                traces.append(tuple(current))
                current = None
                elem.clear()
    except ET.ParseError as exc:
        line, col = exc.position
        raise LogFormatError(f"malformed XES at line {line}, column {col}: {exc}") from exc
    return EventLog(traces)


def write_xes(log: EventLog, target) -> None:
    """Write ``log`` as XES; a trace of multiplicity ``m`` becomes ``m`` trace elements."""
    own = isinstance(target, (str, os.PathLike))
    fh = open(target, "w", encoding="utf-8") if own else target
    if not own and not isinstance(fh, io.TextIOBase):
        fh = io.TextIOWrapper(fh, encoding="utf-8", write_through=True)
        own_wrapper = True
    else:
        own_wrapper = False
    try:
        fh.write('<?xml version="1.0" encoding="UTF-8"?>\n')
        fh.write('<log xes.version="1.0" xes.features="nested-attributes">\n')
        fh.write('  <extension name="Concept" prefix="concept" uri="http://www.xes-standard.org/concept.xesext"/>\n')
        fh.write('  <extension name="Lifecycle" prefix="lifecycle" uri="http://www.xes-standard.org/lifecycle.xesext"/>\n')
        case = 0
        for trace in log.expand():
            case += 1
            fh.write(f'  <trace>\n    <string key="concept:name" value="case_{case}"/>\n')
            for a in trace:
                fh.write(f"    <event>\n      <string key=\"concept:name\" value={quoteattr(a.name)}/>\n")
                if a.lifecycle != ATOMIC:
                    fh.write(f'      <string key="lifecycle:transition" value="{a.lifecycle}"/>\n')
                fh.write("    </event>\n")
            fh.write("  </trace>\n")
        fh.write("</log>\n")
    finally:
        if own:
            fh.close()
        elif own_wrapper:
            fh.detach()


def _order_parser(values: list[str]):
    numeric = []
    for row, v in enumerate(values):
        try:
            numeric.append(float(v))
        except ValueError:
            if numeric:
                raise LogFormatError(f"unparseable order value {v!r} in data row {row + 1}") from None
            break
    else:
        return numeric
    out = []
    for row, v in enumerate(values):
        try:
            out.append(datetime.fromisoformat(v.strip().replace("Z", "+00:00")))
        except ValueError:
            raise LogFormatError(f"unparseable order value {v!r} in data row {row + 1}") from None
    return out


def parse_csv(source, schema: CsvSchema = CsvSchema()) -> EventLog:
    """Read a flat event table; events are ordered per case by the order column.

    Ties keep file order.  Order values must be all numeric or all ISO-8601
    timestamps.
    """
    own = isinstance(source, (str, os.PathLike))
    fh = open(source, newline="", encoding="utf-8") if own else source
    try:
        reader = csv.DictReader(fh, delimiter=schema.delimiter)
        fields = reader.fieldnames or []
        needed = [schema.case_column, schema.activity_column, schema.order_column]
        if schema.lifecycle_column:
            needed.append(schema.lifecycle_column)
        for col in needed:
            if col not in fields:
                raise LogFormatError(f"missing column {col!r}")
        rows = list(reader)
    finally:
        if own:
            fh.close()
    orders = _order_parser([r[schema.order_column] for r in rows])
    cases: dict[str, list] = {}
    for i, (row, order) in enumerate(zip(rows, orders)):
        name = row[schema.activity_column]
        if not name:
            raise LogFormatError(f"empty activity in data row {i + 1}")
        lifecycle = ATOMIC
        if schema.lifecycle_column:
            lifecycle = row[schema.lifecycle_column] or ATOMIC
        cases.setdefault(row[schema.case_column], []).append((order, i, Activity(name, lifecycle)))
    traces = []
    for events in cases.values():
        events.sort(key=lambda e: (e[0], e[1]))
        traces.append(tuple(e[2] for e in events))
    return EventLog(traces)


def write_csv(log: EventLog, schema: CsvSchema, target) -> None:
    own = isinstance(target, (str, os.PathLike))
    fh = open(target, "w", newline="", encoding="utf-8") if own else target
    has_lifecycle = any(a.lifecycle != ATOMIC for a in log.activities)
    if has_lifecycle and not schema.lifecycle_column:
        raise ValueError("log has start/complete activities; schema needs a lifecycle_column")
    try:
        writer = csv.writer(fh, delimiter=schema.delimiter, lineterminator="\n")
        header = [schema.case_column, schema.activity_column, schema.order_column]
        if schema.lifecycle_column:
            header.append(schema.lifecycle_column)
        writer.writerow(header)
        case = 0
        for trace in log.expand():
            case += 1
            for pos, a in enumerate(trace):
                row = [f"case_{case}", a.name, pos]
                if schema.lifecycle_column:
                    row.append(a.lifecycle)
                writer.writerow(row)
    finally:
        if own:
            fh.close()


def read_log(path, fmt: Optional[str] = None, schema: CsvSchema = CsvSchema(),
             keep_lifecycle: bool = False) -> EventLog:
    """Dispatch on ``fmt`` (``xes``/``csv``) or on the file extension."""
    if fmt in (None, "auto"):
        fmt = "csv" if str(path).lower().endswith(".csv") else "xes"
    if fmt == "csv":
        return parse_csv(path, schema)
    if fmt == "xes":
        return parse_xes(path, keep_lifecycle=keep_lifecycle)
    raise ValueError(f"unknown log format {fmt!r}")


def log_statistics(log: EventLog) -> dict:
    """The dataset columns reported for the benchmark logs."""
    cases = log.total_traces
    return {
        "cases": cases,
        "events": log.total_events,
        "activities": len(log.activities),
        "avg_events_per_case": log.total_events / cases if cases else 0.0,
        "variants": len(log),
    }


def write_dfg(dfg: Dfg, target) -> None:
    """``source,target,weight`` rows; ▶ and ■ are written literally."""
    own = isinstance(target, (str, os.PathLike))
    fh = open(target, "w", newline="", encoding="utf-8") if own else target
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["source", "target", "weight"])
        for (x, y), w in dfg.edges.items():
            writer.writerow([x.label, y.label, w])
    finally:
        if own:
            fh.close()


def read_dfg(source) -> Dfg:
    own = isinstance(source, (str, os.PathLike))
    fh = open(source, newline="", encoding="utf-8") if own else source
    try:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or {"source", "target", "weight"} - set(reader.fieldnames):
            raise LogFormatError("DFG file needs source,target,weight columns")
        edges = {}
        for lineno, row in enumerate(reader, start=2):
            try:
                w = float(row["weight"])
            except ValueError:
                raise LogFormatError(f"line {lineno}: weight {row['weight']!r} is not a number") from None
            x = START if row["source"] == START.name else from_label(row["source"])
            y = END if row["target"] == END.name else from_label(row["target"])
            edges[(x, y)] = int(w) if w == int(w) else w
        return Dfg(edges)
    except ValueError as exc:
        if isinstance(exc, LogFormatError):
            raise
        raise LogFormatError(str(exc)) from exc
    finally:
        if own:
            fh.close()
