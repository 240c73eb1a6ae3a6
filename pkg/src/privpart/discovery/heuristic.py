"""Heuristic mining: dependency graph over directly-follows counts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from privpart.log import END, START, Activity, Dfg, EventLog, activity_key, df_counts, sorted_activities


@dataclass(frozen=True)
class DependencyGraph:
    nodes: frozenset[Activity]
    arcs: dict[tuple[Activity, Activity], float]  # includes ▶/■ bindings

    @property
    def start_bindings(self) -> list[Activity]:
        return sorted_activities(b for a, b in self.arcs if a == START)

    @property
    def end_bindings(self) -> list[Activity]:
        return sorted_activities(a for a, b in self.arcs if b == END)


def dependency(ab: float, ba: float) -> float:
    return (ab - ba) / (ab + ba + 1)


def _candidates(dfg: Dfg) -> dict[tuple[Activity, Activity], float]:
    out = {}
    for (a, b), w in dfg.edges.items():
        if a == b:
            out[(a, b)] = w / (w + 1)
        else:
            out[(a, b)] = dependency(w, dfg.weight(b, a))
    return out


def _strongest(arcs, cands, dfg):
    """Highest dependency, then highest count, then the lexicographically smallest arc."""
    if not arcs:
        return None
    ordered = sorted(arcs, key=lambda arc: (activity_key(arc[0]), activity_key(arc[1])))
    return max(ordered, key=lambda arc: (cands[arc], dfg.weight(*arc)))


def heuristic_mine(source: Union[EventLog, Dfg], dependency_threshold: float = 0.2) -> DependencyGraph:
    """Dependency graph with the all-activities-connected heuristic.

    ``dependency(a, b) = (|a>b| - |b>a|) / (|a>b| + |b>a| + 1)``; a
    self-loop uses ``|a>a| / (|a>a| + 1)``.  Arcs at or above the threshold
    are kept, every activity keeps its strongest incoming and outgoing arc,
    and arcs are added until every activity lies on a path ▶ → ■.
    """
    if not 0.0 < dependency_threshold < 1.0:
        raise ValueError("dependency_threshold must be in (0, 1)")
    dfg = df_counts(source) if isinstance(source, EventLog) else source
    nodes = dfg.activities
    cands = _candidates(dfg)
    kept = {arc: v for arc, v in cands.items() if v >= dependency_threshold}

    def strongest(arcs):
        return _strongest(arcs, cands, dfg)

    for x in sorted_activities(nodes | {START, END}):
        outs = [arc for arc in cands if arc[0] == x and arc[1] != x]
        ins = [arc for arc in cands if arc[1] == x and arc[0] != x]
        for arc in (strongest(outs), strongest(ins)):
            if arc is not None:
                kept[arc] = cands[arc]

    # connect stragglers: forward from ▶, then backward from ■
    for forward in (True, False):
        while True:
            reached = _reach(kept, START if forward else END, forward)
            missing = [n for n in nodes if n not in reached]
            if not missing:
                break
            bridge = [
                arc for arc in cands
                if arc not in kept
                and ((arc[0] in reached and arc[1] not in reached) if forward
                     else (arc[1] in reached and arc[0] not in reached))
            ]
            arc = strongest(bridge)
            if arc is None:
                break
            kept[arc] = cands[arc]
    ordered = sorted(kept, key=lambda arc: (activity_key(arc[0]), activity_key(arc[1])))
    return DependencyGraph(frozenset(nodes), {arc: kept[arc] for arc in ordered})


def _reach(arcs, root: Activity, forward: bool) -> set[Activity]:
    nxt: dict[Activity, list[Activity]] = {}
    for a, b in arcs:
        src, dst = (a, b) if forward else (b, a)
        nxt.setdefault(src, []).append(dst)
    seen = {root}
    stack = [root]
    while stack:
        x = stack.pop()
        for y in nxt.get(x, ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen
