"""Activities, traces, event logs and the two count queries built on them.

Traces are plain tuples of :class:`Activity`.  An :class:`EventLog` stores the
multiset of traces as an insertion-ordered mapping ``trace -> multiplicity`` so
that iteration order (and with it every seeded noise draw downstream) is
reproducible.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import Union

import numpy as np

from privpart import kernels

ATOMIC = "atomic"
START_LC = "start"
COMPLETE_LC = "complete"
LIFECYCLES = (ATOMIC, START_LC, COMPLETE_LC)
_LC_RANK = {lc: i for i, lc in enumerate(LIFECYCLES)}

ROOT_LABEL = "⊤"
START_LABEL = "▶"
END_LABEL = "■"
RESERVED_LABELS = frozenset({ROOT_LABEL, START_LABEL, END_LABEL})


@dataclass(frozen=True, slots=True)
class Activity:
    """An activity label plus lifecycle.

    Raw events are always ``atomic``; ``start``/``complete`` only appear on
    high-level activities produced by partitioning.
    """

    name: str
    lifecycle: str = ATOMIC

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("activity name must be non-empty")
        if self.lifecycle not in _LC_RANK:
            raise ValueError(f"unknown lifecycle {self.lifecycle!r}")

    @property
    def label(self) -> str:
        if self.lifecycle == ATOMIC:
            return self.name
        return f"{self.name}+{self.lifecycle}"

    @property
    def is_sentinel(self) -> bool:
        return self.name in RESERVED_LABELS

    def with_lifecycle(self, lifecycle: str) -> Activity:
        return Activity(self.name, lifecycle)

    def __str__(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"Activity({self.label!r})"


ROOT = Activity(ROOT_LABEL)
START = Activity(START_LABEL)
END = Activity(END_LABEL)

Trace = tuple[Activity, ...]
ActivityLike = Union[Activity, str]


def act(x: ActivityLike) -> Activity:
    return x if isinstance(x, Activity) else Activity(x)


def from_label(label: str) -> Activity:
    """Inverse of :attr:`Activity.label` (``"A+start"`` -> ``Activity("A", "start")``)."""
    for lc in (START_LC, COMPLETE_LC):
        suffix = "+" + lc
        if label.endswith(suffix) and len(label) > len(suffix):
            return Activity(label[: -len(suffix)], lc)
    return Activity(label)


def trace_of(items: Iterable[ActivityLike]) -> Trace:
    return tuple(act(x) for x in items)


def activity_key(a: Activity) -> tuple:
    """Total order on nodes: ▶ first, ■ last, everything else by (name, lifecycle)."""
    if a == START:
        return (0, "", 0)
    if a == END:
        return (2, "", 0)
    return (1, a.name, _LC_RANK[a.lifecycle])


def sorted_activities(acts: Iterable[Activity]) -> list[Activity]:
    return sorted(acts, key=activity_key)


class EventLog:
    """Multiset of traces.

    ``EventLog({("a", "b"): 2, ("a",): 1})`` or ``EventLog([["a", "b"], ["a"]])``;
    strings are promoted to atomic activities.  Repeated traces are merged
    and the order of first appearance is kept.
    """

    def __init__(self, traces: Mapping | Iterable = ()) -> None:
        variants: dict[Trace, int] = {}
        items = traces.items() if isinstance(traces, Mapping) else ((t, 1) for t in traces)
        for raw, count in items:
            trace = trace_of(raw)
            if count != int(count) or count < 1:
                raise ValueError(f"multiplicity must be a positive integer, got {count!r}")
            for a in trace:
                if a.is_sentinel:
                    raise ValueError(f"reserved label {a.name!r} inside a trace")
            variants[trace] = variants.get(trace, 0) + int(count)
        self._variants = MappingProxyType(variants)

    @property
    def variants(self) -> Mapping[Trace, int]:
        return self._variants

    def __reduce__(self):
        return (EventLog, (dict(self._variants),))

    def __iter__(self) -> Iterator[tuple[Trace, int]]:
        return iter(self._variants.items())

    def __len__(self) -> int:
        return len(self._variants)

    def __bool__(self) -> bool:
        return bool(self._variants)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventLog):
            return NotImplemented
        return dict(self._variants) == dict(other._variants)

    def __hash__(self) -> int:
        return hash(frozenset(self._variants.items()))

    def __repr__(self) -> str:
        shown = ", ".join(
            f"<{','.join(a.label for a in t)}>:{m}" for t, m in list(self._variants.items())[:5]
        )
        more = ", ..." if len(self._variants) > 5 else ""
        return f"EventLog({{{shown}{more}}})"

    @cached_property
    def total_traces(self) -> int:
        return sum(self._variants.values())

    @cached_property
    def total_events(self) -> int:
        return sum(len(t) * m for t, m in self._variants.items())

    @cached_property
    def activities(self) -> frozenset[Activity]:
        return frozenset(a for t in self._variants for a in t)

    def expand(self) -> Iterator[Trace]:
        """Yield every trace as often as its multiplicity."""
        for t, m in self._variants.items():
            for _ in range(m):
                yield t

    def has_empty_trace(self) -> bool:
        return () in self._variants

    @cached_property
    def encoded(self) -> tuple[list[Activity], np.ndarray, np.ndarray, np.ndarray]:
        """Integer encoding used by the compiled kernels.

        Returns ``(alphabet, flat, offsets, multiplicities)`` where trace ``i``
        is ``flat[offsets[i]:offsets[i + 1]]`` over indices into ``alphabet``.
        """
        alphabet = sorted_activities(self.activities)
        index = {a: i for i, a in enumerate(alphabet)}
        lengths = [len(t) for t in self._variants]
        offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        flat = np.fromiter(
            (index[a] for t in self._variants for a in t), dtype=np.int32, count=int(offsets[-1])
        )
        mult = np.fromiter(self._variants.values(), dtype=np.int64, count=len(lengths))
        return alphabet, flat, offsets, mult


@dataclass(frozen=True)
class Dfg:
    """Weighted directly-follows graph with artificial ▶/■ nodes."""

    edges: Mapping[tuple[Activity, Activity], float]

    def __post_init__(self) -> None:
        clean = {}
        for (x, y), w in self.edges.items():
            if w < 0:
                raise ValueError(f"negative weight on ({x}, {y})")
            if y == START or x == END:
                raise ValueError(f"edge ({x}, {y}) violates ▶/■ direction")
            if w > 0:
                clean[(x, y)] = w
        object.__setattr__(self, "edges", MappingProxyType(clean))

    @cached_property
    def activities(self) -> frozenset[Activity]:
        return frozenset(n for e in self.edges for n in e if n not in (START, END))

    @cached_property
    def nodes(self) -> frozenset[Activity]:
        return self.activities | {START, END}

    def weight(self, x: Activity, y: Activity) -> float:
        return self.edges.get((x, y), 0)

    def successors(self, x: Activity) -> dict[Activity, float]:
        return {b: w for (a, b), w in self.edges.items() if a == x}

    def predecessors(self, y: Activity) -> dict[Activity, float]:
        return {a: w for (a, b), w in self.edges.items() if b == y}

    @property
    def start_activities(self) -> dict[Activity, float]:
        return {b: w for (a, b), w in self.edges.items() if a == START and b != END}

    @property
    def end_activities(self) -> dict[Activity, float]:
        return {a: w for (a, b), w in self.edges.items() if b == END and a != START}

    def total_weight(self) -> float:
        return sum(self.edges.values())

    def __reduce__(self):
        return (Dfg, (dict(self.edges),))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dfg):
            return NotImplemented
        return dict(self.edges) == dict(other.edges)

    def __hash__(self) -> int:
        return hash(frozenset(self.edges.items()))


VariantDistribution = Mapping[Trace, float]


def df_counts(log: EventLog) -> Dfg:
    """Directly-follows counts including ▶→first and last→■ edges."""
    if not log:
        raise ValueError("empty log")
    alphabet, flat, offsets, mult = log.encoded
    n = len(alphabet)
    counts = kernels.df_matrix(flat, offsets, mult, n)
    nodes = alphabet + [START]
    targets = alphabet + [END]
    rows, cols = np.nonzero(counts)
    return Dfg({(nodes[i], targets[j]): int(counts[i, j]) for i, j in zip(rows, cols)})


def variant_counts(log: EventLog) -> dict[Trace, int]:
    """The trace-variant query: every distinct trace with its case count."""
    if not log:
        raise ValueError("empty log")
    return dict(log.variants)


def dfg_matrix(dfg: Dfg, alphabet: list[Activity]) -> np.ndarray:
    """Dense ``(n+1) x (n+1)`` weights; row ``n`` is ▶, column ``n`` is ■."""
    n = len(alphabet)
    index = {a: i for i, a in enumerate(alphabet)}
    index[START] = n
    col = dict(index)
    col[END] = n
    del col[START]
    out = np.zeros((n + 1, n + 1), dtype=np.float64)
    for (x, y), w in dfg.edges.items():
        out[index[x], col[y]] = w
    return out
