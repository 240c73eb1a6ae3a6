"""Event log partitioning along an abstraction hierarchy.

Each trace is split into one sub-trace per sub-process (the events mapped to
that high-level activity, in order) while the trace itself keeps only the
first and last occurrence of every high-level activity, tagged ``start`` and
``complete``.  A sub-process seen once per trace leaves a single ``complete``
event.
"""

from __future__ import annotations

import os
import re
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Optional

from privpart.hierarchy import AbstractionHierarchy, HierarchyError, validate
from privpart.log import (
    ATOMIC,
    COMPLETE_LC,
    ROOT,
    START_LC,
    Activity,
    EventLog,
    Trace,
    sorted_activities,
)


@dataclass(frozen=True)
class TraceProvenance:
    original: Trace
    multiplicity: int
    abstracted: Trace
    pieces: tuple[tuple[Activity, Trace], ...]


@dataclass(frozen=True)
class PartitionResult:
    abstracted_log: EventLog
    sub_logs: dict[Activity, EventLog]
    provenance: tuple[TraceProvenance, ...] = ()
    lower: Optional[PartitionResult] = field(default=None, repr=False)

    def parts(self) -> list[tuple[str, EventLog]]:
        """``(part id, log)`` for the abstracted log and every sub-log, in a fixed order."""
        out = [("abstracted", self.abstracted_log)]
        for alpha in sorted_activities(self.sub_logs):
            out.append((f"sub_{alpha.name}", self.sub_logs[alpha]))
        return out


def compress(trace: Iterable[Activity], high_level: Optional[set] = None) -> Trace:
    """Keep only the first and last occurrence of each label in ``high_level``.

    ``high_level=None`` compresses every label.  Other events are untouched
    and relative order is preserved.
    """
    trace = tuple(trace)
    first: dict[Activity, int] = {}
    last: dict[Activity, int] = {}
    for i, a in enumerate(trace):
        if high_level is None or a in high_level:
            first.setdefault(a, i)
            last[a] = i
    return tuple(
        a for i, a in enumerate(trace) if a not in first or i == first[a] or i == last[a]
    )


def _partition_trace(trace: Trace, mapping: dict[Activity, Activity]):
    pieces: dict[Activity, list[Activity]] = {}
    slots: list[tuple[Activity, Optional[Activity]]] = []
    for a in trace:
        alpha = mapping.get(Activity(a.name))
        if alpha is None or alpha == ROOT:
            slots.append((a, None))
            continue
        pieces.setdefault(alpha, []).append(a)
        slots.append((a, alpha))
    first: dict[Activity, int] = {}
    last: dict[Activity, int] = {}
    for i, (_, alpha) in enumerate(slots):
        if alpha is not None:
            first.setdefault(alpha, i)
            last[alpha] = i
    out: list[Activity] = []
    for i, (a, alpha) in enumerate(slots):
        if alpha is None:
            out.append(a)
        elif i == last[alpha]:
            out.append(alpha.with_lifecycle(COMPLETE_LC))
        elif i == first[alpha]:
            out.append(alpha.with_lifecycle(START_LC))
    return tuple(out), tuple((alpha, tuple(p)) for alpha, p in pieces.items())


def _partition_level(log: EventLog, mapping: dict[Activity, Activity]) -> PartitionResult:
    abstracted: dict[Trace, int] = {}
    subs: dict[Activity, dict[Trace, int]] = {}
    provenance = []
    for trace, m in log:
        new_trace, pieces = _partition_trace(trace, mapping)
        abstracted[new_trace] = abstracted.get(new_trace, 0) + m
        for alpha, sub in pieces:
            bucket = subs.setdefault(alpha, {})
            bucket[sub] = bucket.get(sub, 0) + m
        provenance.append(TraceProvenance(trace, m, new_trace, pieces))
    sub_logs = {alpha: EventLog(subs[alpha]) for alpha in sorted_activities(subs)}
    return PartitionResult(EventLog(abstracted), sub_logs, tuple(provenance))


def partition(log: EventLog, h: AbstractionHierarchy) -> PartitionResult:
    """Split ``log`` into an abstracted log plus one sub-log per sub-process.

    Multi-level hierarchies are applied one level at a time, bottom-up; the
    returned result keeps the previous level in ``lower`` and ``sub_logs``
    collects the sub-logs of every level.
    """
    violations = validate(h, log.activities)
    if violations:
        raise HierarchyError(violations)
    levels = h.levels()
    if not levels:
        return PartitionResult(log, {}, tuple(TraceProvenance(t, m, t, ()) for t, m in log))
    result: Optional[PartitionResult] = None
    current = log
    for mapping in levels:
        step = _partition_level(current, mapping)
        if result is not None:
            merged = dict(result.sub_logs)
            merged.update(step.sub_logs)
            step = PartitionResult(step.abstracted_log, merged, step.provenance, lower=result)
        result = step
        current = step.abstracted_log
    return result


def _flatten_trace(rec: TraceProvenance) -> Trace:
    pieces = dict(rec.pieces)
    placed: set[Activity] = set()
    out: list[Activity] = []
    for a in rec.abstracted:
        alpha = Activity(a.name)
        if a.lifecycle == ATOMIC or alpha not in pieces:
            out.append(a)
            continue
        if alpha in placed:
            continue
        out.extend(pieces[alpha])
        placed.add(alpha)
    orphans = set(pieces) - placed
    if orphans:
        names = ", ".join(a.name for a in sorted_activities(orphans))
        raise ValueError(f"orphaned sub-trace for {names}")
    return tuple(out)


def flatten(result: PartitionResult) -> EventLog:
    """Re-insert each sub-trace at the position of its high-level start event."""
    if not result.provenance and result.abstracted_log:
        raise ValueError("partition result has no provenance to flatten")
    out: dict[Trace, int] = {}
    for rec in result.provenance:
        t = _flatten_trace(rec)
        out[t] = out.get(t, 0) + rec.multiplicity
    flat = EventLog(out)
    if result.lower is not None:
        if flat != result.lower.abstracted_log:
            raise ValueError("inconsistent provenance between hierarchy levels")
        return flatten(result.lower)
    return flat


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name) or "_"


def write_partition(result: PartitionResult, out_dir) -> list[str]:
    """Write ``abstracted.xes`` and ``sub_<α>.xes`` files; returns the paths."""
    from privpart.logio import write_xes

    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, "abstracted.xes")]
    write_xes(result.abstracted_log, paths[0])
    for alpha in sorted_activities(result.sub_logs):
        path = os.path.join(out_dir, f"sub_{_safe_name(alpha.name)}.xes")
        write_xes(result.sub_logs[alpha], path)
        paths.append(path)
    return paths
