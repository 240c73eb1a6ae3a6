"""Abstraction hierarchies: activity -> higher-level activity, rooted at ⊤."""

from __future__ import annotations

import csv
import io
import os
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Optional

import numpy as np

from privpart.log import ROOT, ROOT_LABEL, Activity, EventLog, act, activity_key, sorted_activities


@dataclass(frozen=True)
class Violation:
    kind: str  # "self", "cycle", "unrooted", "root"
    activities: tuple[Activity, ...]

    def __str__(self) -> str:
        names = ", ".join(a.label for a in self.activities)
        if self.kind == "cycle":
            return f"cycle {' -> '.join(a.label for a in self.activities)}"
        if self.kind == "self":
            return f"self-abstraction of {names}"
        if self.kind == "root":
            return f"root {ROOT_LABEL} must map to itself"
        return f"unrooted {names}"


class HierarchyError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("invalid hierarchy: " + "; ".join(str(v) for v in violations))


class AbstractionHierarchy:
    """Partial mapping ``child -> parent``; lookups ignore the child's lifecycle."""

    root = ROOT

    def __init__(self, parent: Mapping = ()) -> None:
        items = parent.items() if isinstance(parent, Mapping) else parent
        mapping = {}
        for child, par in items:
            child, par = act(child), act(par)
            mapping[Activity(child.name)] = Activity(par.name)
        self._parent = MappingProxyType(mapping)

    @property
    def parent(self) -> Mapping[Activity, Activity]:
        return self._parent

    def __len__(self) -> int:
        return len(self._parent)

    def __reduce__(self):
        return (AbstractionHierarchy, (dict(self._parent),))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AbstractionHierarchy):
            return NotImplemented
        return dict(self._parent) == dict(other._parent)

    def __repr__(self) -> str:
        body = ", ".join(f"{c.label}->{p.label}" for c, p in self._parent.items())
        return f"AbstractionHierarchy({{{body}}})"

    def abstract(self, a: Activity) -> Optional[Activity]:
        if a.name == ROOT.name:
            return ROOT
        return self._parent.get(Activity(a.name))

    def high_level(self) -> list[Activity]:
        """Activities that are the parent of something, excluding ⊤."""
        return sorted_activities({p for p in self._parent.values() if p != ROOT})

    def members(self, alpha: Activity) -> list[Activity]:
        return sorted_activities(c for c, p in self._parent.items() if p == Activity(alpha.name))

    def levels(self) -> list[dict[Activity, Activity]]:
        """One-step mappings per level, bottom-up, without edges into ⊤."""
        parents = {p for p in self._parent.values()}
        height: dict[Activity, int] = {}

        def h(x: Activity) -> int:
            if x not in height:
                kids = [c for c, p in self._parent.items() if p == x and c != x]
                height[x] = 0 if not kids else 1 + max(h(c) for c in kids)
            return height[x]

        out: dict[int, dict[Activity, Activity]] = {}
        for child, par in self._parent.items():
            if par == ROOT or child == ROOT:
                continue
            level = h(child) if child in parents else 0
            out.setdefault(level, {})[child] = par
        return [out[k] for k in sorted(out)]

    def restricted(self, mapping: Mapping[Activity, Activity]) -> AbstractionHierarchy:
        return AbstractionHierarchy(mapping)


def validate(h: AbstractionHierarchy, universe: Iterable[Activity] = ()) -> list[Violation]:
    """All invariant violations; empty iff ``h`` is a valid hierarchy.

    ``universe`` lists activities that must be consistent with the mapping;
    activities without a parent are allowed (they are left unabstracted).
    """
    out: list[Violation] = []
    parent = dict(h.parent)
    if ROOT in parent and parent[ROOT] != ROOT:
        out.append(Violation("root", (ROOT,)))
    nodes = set(parent) | set(parent.values())
    for u in universe:
        u = Activity(u.name)
        if u in parent:
            nodes.add(u)
    nodes.discard(ROOT)
    for a in sorted_activities(x for x, p in parent.items() if x == p and x != ROOT):
        out.append(Violation("self", (a,)))
    reported_cycles: set[frozenset] = set()
    unrooted: set[Activity] = set()
    for start in sorted_activities(nodes):
        path = [start]
        seen = {start: 0}
        cur = start
        while True:
            nxt = parent.get(cur)
            if nxt is None:
                unrooted.add(cur)
                break
            if nxt == ROOT:
                break
            if nxt == cur:
                break
            if nxt in seen:
                cyc = path[seen[nxt]:]
                key = frozenset(cyc)
                if key not in reported_cycles:
                    reported_cycles.add(key)
                    lo = min(range(len(cyc)), key=lambda i: activity_key(cyc[i]))
                    rot = cyc[lo:] + cyc[:lo]
                    out.append(Violation("cycle", tuple(rot) + (rot[0],)))
                break
            seen[nxt] = len(path)
            path.append(nxt)
            cur = nxt
    for a in sorted_activities(unrooted):
        out.append(Violation("unrooted", (a,)))
    return out


def abstract(h: AbstractionHierarchy, a: Activity) -> Optional[Activity]:
    return h.abstract(a)


def _group_names(n: int, taken: set[str]) -> list[Activity]:
    names = []
    for i in range(1, n + 1):
        name = f"G_{i}"
        while name in taken:
            name += "'"
        names.append(Activity(name))
    return names


def _from_groups(groups: list[list[Activity]], taken: set[str]) -> AbstractionHierarchy:
    groups = sorted((sorted_activities(g) for g in groups), key=lambda g: activity_key(g[0]))
    names = _group_names(len(groups), taken)
    mapping: dict[Activity, Activity] = {}
    for name, group in zip(names, groups):
        for a in group:
            mapping[a] = name
        mapping[name] = ROOT
    return AbstractionHierarchy(mapping)


def derive_random(universe: Iterable[Activity], k: int, seed: int) -> AbstractionHierarchy:
    """Random clustering of ``universe`` into ``k`` non-empty groups."""
    acts = sorted_activities({Activity(act(a).name) for a in universe})
    if not 1 <= k <= len(acts):
        raise ValueError(f"k must be in [1, {len(acts)}], got {k}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(acts))
    labels = np.empty(len(acts), dtype=np.int64)
    labels[order[:k]] = np.arange(k)
    rest = order[k:]
    labels[rest] = rng.integers(0, k, size=len(rest))
    groups = [[acts[i] for i in range(len(acts)) if labels[i] == g] for g in range(k)]
    return _from_groups(groups, {a.name for a in acts})


def proximity(log: EventLog, window: int) -> dict[tuple[Activity, Activity], int]:
    """Symmetric co-occurrence counts of distinct activities at distance <= window."""
    if window < 1:
        raise ValueError("window must be positive")
    prox: dict[tuple[Activity, Activity], int] = {}
    for trace, m in log:
        names = [Activity(a.name) for a in trace]
        for i, a in enumerate(names):
            for j in range(i + 1, min(len(names), i + window + 1)):
                b = names[j]
                if a == b:
                    continue
                key = (a, b) if activity_key(a) < activity_key(b) else (b, a)
                prox[key] = prox.get(key, 0) + m
    return prox


def derive_cooccurrence(log: EventLog, k: int, window: int = 1) -> AbstractionHierarchy:
    """Average-linkage agglomerative clustering on window proximity.

    Ties between equally similar cluster pairs go to the lexicographically
    smallest pair of (sorted member names).
    """
    acts = sorted_activities({Activity(a.name) for a in log.activities})
    if not 1 <= k <= len(acts):
        raise ValueError(f"k must be in [1, {len(acts)}], got {k}")
    prox = proximity(log, window)
    clusters: list[tuple[Activity, ...]] = [(a,) for a in acts]

    def key(c):
        return tuple(activity_key(a) for a in c)

    def link(c1, c2) -> Fraction:
        total = 0
        for a in c1:
            for b in c2:
                pair = (a, b) if activity_key(a) < activity_key(b) else (b, a)
                total += prox.get(pair, 0)
        return Fraction(total, len(c1) * len(c2))

    while len(clusters) > k:
        best = None
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                c1, c2 = clusters[i], clusters[j]
                pair_key = tuple(sorted((key(c1), key(c2))))
                score = link(c1, c2)
                cand = (-score, pair_key, i, j)
                if best is None or cand[:2] < best[:2]:
                    best = cand
        _, _, i, j = best
        merged = tuple(sorted_activities(clusters[i] + clusters[j]))
        clusters = [c for idx, c in enumerate(clusters) if idx not in (i, j)] + [merged]
    return _from_groups([list(c) for c in clusters], {a.name for a in acts})


def parse_mapping(source) -> AbstractionHierarchy:
    """Read ``child,parent`` lines; ``⊤`` denotes the root."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8", newline="") as fh:
            text = fh.read()
    else:
        text = source.read()
    pairs = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        if len(row) != 2:
            raise ValueError(f"line {lineno}: expected 'child,parent', got {row!r}")
        child, par = row[0].strip(), row[1].strip()
        if not child or not par:
            raise ValueError(f"line {lineno}: empty activity name")
        pairs.append((Activity(child), Activity(par)))
    h = AbstractionHierarchy(pairs)
    violations = validate(h)
    if violations:
        raise HierarchyError(violations)
    return h


def write_mapping(h: AbstractionHierarchy, target) -> None:
    own = isinstance(target, (str, os.PathLike))
    fh = open(target, "w", encoding="utf-8", newline="") if own else target
    try:
        writer = csv.writer(fh, lineterminator="\n")
        for child, par in h.parent.items():
            writer.writerow([child.name, par.name])
    finally:
        if own:
            fh.close()
