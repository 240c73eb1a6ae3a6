"""Inductive mining on directly-follows graphs.

Cuts are tried in the order exclusive, sequence, parallel, loop; the first
one found splits the activity set and each part is mined recursively on its
projected sub-graph.  When no cut applies the flower model is returned.
"""

from __future__ import annotations

from dataclasses import dataclass

from privpart.log import END, START, Activity, Dfg, act, activity_key, sorted_activities
from privpart.discovery.tree import TAU, ProcessTree, leaf, loop, par, seq, xor


def filter_dfg(dfg: Dfg, noise_threshold: float = 0.2) -> Dfg:
    """Drop edges weaker than ``noise_threshold`` times the source's strongest outgoing edge.

    The strongest outgoing and strongest incoming edges of every node are
    always kept, so no node (▶ and ■ included) loses all its connections.
    """
    if not 0.0 <= noise_threshold <= 1.0:
        raise ValueError("noise_threshold must be in [0, 1]")
    max_out: dict[Activity, float] = {}
    max_in: dict[Activity, float] = {}
    for (x, y), w in dfg.edges.items():
        max_out[x] = max(max_out.get(x, 0), w)
        max_in[y] = max(max_in.get(y, 0), w)
    kept = {}
    for (x, y), w in dfg.edges.items():
        if w >= noise_threshold * max_out[x] or w == max_in[y]:
            kept[(x, y)] = w
    return Dfg(kept)


@dataclass(frozen=True)
class _SubDfg:
    acts: frozenset
    edges: frozenset  # (a, b) pairs between activities in acts
    starts: frozenset
    ends: frozenset

    def succ(self) -> dict:
        out = {a: set() for a in self.acts}
        for a, b in self.edges:
            out[a].add(b)
        return out


def _by_name(items) -> list[Activity]:
    return sorted_activities(items)


def _components(acts, edges) -> list[list[Activity]]:
    """Connected components of the undirected graph, ordered by smallest member."""
    parent = {a: a for a in acts}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups: dict[Activity, list[Activity]] = {}
    for a in acts:
        groups.setdefault(find(a), []).append(a)
    comps = [_by_name(g) for g in groups.values()]
    return sorted(comps, key=lambda c: activity_key(c[0]))


def _project(sub: _SubDfg, part) -> _SubDfg:
    part = frozenset(part)
    edges = frozenset((a, b) for a, b in sub.edges if a in part and b in part)
    starts = set(sub.starts & part)
    ends = set(sub.ends & part)
    for a, b in sub.edges:
        if a not in part and b in part:
            starts.add(b)
        if a in part and b not in part:
            ends.add(a)
    return _SubDfg(part, edges, frozenset(starts), frozenset(ends))


def _restrict(sub: _SubDfg, part) -> _SubDfg:
    part = frozenset(part)
    edges = frozenset((a, b) for a, b in sub.edges if a in part and b in part)
    return _SubDfg(part, edges, sub.starts & part, sub.ends & part)


def _exclusive_cut(sub: _SubDfg):
    comps = _components(sub.acts, sub.edges)
    return comps if len(comps) > 1 else None


def _reachability(acts, succ) -> dict:
    reach = {}
    for a in acts:
        seen = set()
        stack = [a]
        while stack:
            x = stack.pop()
            for y in succ[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        reach[a] = seen
    return reach


def _sequence_cut(sub: _SubDfg):
    succ = sub.succ()
    reach = _reachability(sub.acts, succ)
    # strongly connected components, then merge pairwise unreachable ones
    scc: dict[Activity, frozenset] = {}
    for a in _by_name(sub.acts):
        if a in scc:
            continue
        comp = frozenset({a} | {b for b in reach[a] if a in reach[b]})
        for b in comp:
            scc[b] = comp
    comps = sorted(set(scc.values()), key=lambda c: activity_key(min(c, key=activity_key)))
    rep = {c: min(c, key=activity_key) for c in comps}

    def reaches(c1, c2) -> bool:
        return rep[c2] in reach[rep[c1]]

    parent = {c: c for c in comps}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for i, c1 in enumerate(comps):
        for c2 in comps[i + 1:]:
            if not reaches(c1, c2) and not reaches(c2, c1):
                r1, r2 = find(c1), find(c2)
                if r1 != r2:
                    parent[r2] = r1
    groups: dict = {}
    for c in comps:
        groups.setdefault(find(c), set()).update(c)
    if len(groups) < 2:
        return None
    parts = [frozenset(g) for g in groups.values()]
    group_of = {a: i for i, g in enumerate(parts) for a in g}
    # order groups: g before h when anything in g reaches h
    later = {i: set() for i in range(len(parts))}
    for a in sub.acts:
        for b in reach[a]:
            if group_of[a] != group_of[b]:
                later[group_of[a]].add(group_of[b])
    for i in later:
        for j in later[i]:
            if i in later[j]:
                return None
    order = sorted(range(len(parts)), key=lambda i: -len(later[i]))
    for pos, i in enumerate(order):
        if len(later[i]) != len(parts) - 1 - pos:
            return None
    return [_by_name(parts[i]) for i in order]


def _parallel_cut(sub: _SubDfg):
    if not sub.starts or not sub.ends:
        return None
    not_par = [
        (a, b)
        for a in sub.acts
        for b in sub.acts
        if a != b and not ((a, b) in sub.edges and (b, a) in sub.edges)
    ]
    comps = _components(sub.acts, not_par)
    if len(comps) < 2:
        return None
    good = [c for c in comps if set(c) & sub.starts and set(c) & sub.ends]
    bad = [c for c in comps if c not in good]
    if not good:
        return None
    if bad:
        merged = list(good[0])
        for c in bad:
            merged.extend(c)
        good[0] = _by_name(merged)
        good = sorted(good, key=lambda c: activity_key(c[0]))
    return good if len(good) > 1 else None


def _loop_cut(sub: _SubDfg):
    if not sub.starts or not sub.ends:
        return None
    do = set(sub.starts | sub.ends)
    rest = sub.acts - do
    comps = _components(rest, [(a, b) for a, b in sub.edges if a in rest and b in rest])
    changed = True
    while changed:
        changed = False
        redo = []
        for comp in comps:
            cset = set(comp)
            ok = True
            for a, b in sub.edges:
                if b in cset and a in do and a not in sub.ends:
                    ok = False
                if a in cset and b in do and b not in sub.starts:
                    ok = False
            if ok:
                for c in comp:
                    from_ends = {e for e in sub.ends if (e, c) in sub.edges}
                    if from_ends and from_ends != sub.ends:
                        ok = False
                    to_starts = {s for s in sub.starts if (c, s) in sub.edges}
                    if to_starts and to_starts != sub.starts:
                        ok = False
            if ok:
                redo.append(comp)
            else:
                do.update(comp)
                changed = True
        comps = redo
    if not comps:
        return None
    return [_by_name(do)] + comps


def _mine(sub: _SubDfg) -> ProcessTree:
    if not sub.acts:
        return TAU
    if len(sub.acts) == 1:
        (a,) = sub.acts
        return loop(leaf(a), TAU) if (a, a) in sub.edges else leaf(a)
    parts = _exclusive_cut(sub)
    if parts:
        return xor(*(_mine(_project(sub, p)) for p in parts))
    parts = _sequence_cut(sub)
    if parts:
        kids = []
        for i, p in enumerate(parts):
            child = _mine(_project(sub, p))
            if _skippable(sub, parts, i):
                child = xor(TAU, child)
            kids.append(child)
        return seq(*kids)
    parts = _parallel_cut(sub)
    if parts:
        # interleaving edges are not entries: each branch keeps only the true starts/ends
        return par(*(_mine(_restrict(sub, p)) for p in parts))
    parts = _loop_cut(sub)
    if parts:
        do = _project(sub, parts[0])
        do = _SubDfg(do.acts, do.edges, sub.starts, sub.ends)
        redos = []
        for p in parts[1:]:
            pset = frozenset(p)
            edges = frozenset((a, b) for a, b in sub.edges if a in pset and b in pset)
            starts = frozenset(b for a, b in sub.edges if b in pset and a not in pset)
            ends = frozenset(a for a, b in sub.edges if a in pset and b not in pset)
            redos.append(_mine(_SubDfg(pset, edges, starts, ends)))
        return loop(_mine(do), *redos)
    return flower(sub.acts)


def _skippable(sub: _SubDfg, parts, i: int) -> bool:
    """True when some directly-follows edge (or ▶/■) jumps over part ``i`` of a sequence."""
    before = set().union(*parts[:i]) if i else set()
    after = set().union(*parts[i + 1:]) if i + 1 < len(parts) else set()
    if sub.starts & after or sub.ends & before:
        return True
    return any(a in before and b in after for a, b in sub.edges)


def flower(acts) -> ProcessTree:
    """``loop(τ, a1, ..., an)``: any sequence over ``acts``."""
    return loop(TAU, *(leaf(a) for a in _by_name(act(x) for x in acts)))


def inductive_mine(dfg: Dfg) -> ProcessTree:
    """Process tree from a (filtered) DFG with ▶/■ edges."""
    acts = dfg.activities
    edges = frozenset((a, b) for a, b in dfg.edges if a in acts and b in acts)
    starts = frozenset(dfg.start_activities)
    ends = frozenset(dfg.end_activities)
    tree = _mine(_SubDfg(frozenset(acts), edges, starts, ends))
    if dfg.weight(START, END) > 0:
        return TAU if tree.is_tau else xor(TAU, tree)
    return tree
