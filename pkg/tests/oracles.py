"""Brute-force reference implementations used only by the tests.

Nothing here imports the replay kernels or the miners: trees are given
semantics directly, nets are explored marking by marking, and token replay
searches silent paths by iterative deepening instead of breadth-first search.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from privpart.discovery.tree import EXCLUSIVE, LOOP, PARALLEL, SEQUENCE


def _interleavings(a: tuple, b: tuple):
    if not a:
        yield b
        return
    if not b:
        yield a
        return
    for rest in _interleavings(a[1:], b):
        yield (a[0],) + rest
    for rest in _interleavings(a, b[1:]):
        yield (b[0],) + rest


def _concat(l1: set, l2: set, bound: int) -> set:
    return {x + y for x in l1 for y in l2 if len(x) + len(y) <= bound}


def tree_language(tree, bound: int) -> frozenset:
    """All traces of ``tree`` with at most ``bound`` events, by direct operator semantics."""
    if tree.operator is None:
        return frozenset({()} if tree.activity is None else {(tree.activity,)})
    kids = [tree_language(c, bound) for c in tree.children]
    if tree.operator == SEQUENCE:
        out = {()}
        for k in kids:
            out = _concat(out, k, bound)
        return frozenset(out)
    if tree.operator == EXCLUSIVE:
        return frozenset().union(*kids)
    if tree.operator == PARALLEL:
        out = {()}
        for k in kids:
            out = {
                w for x in out for y in k if len(x) + len(y) <= bound for w in _interleavings(x, y)
            }
        return frozenset(out)
    assert tree.operator == LOOP
    do = set(kids[0])
    redo = set().union(*kids[1:])
    out = set(do)
    frontier = set(do)
    while frontier:
        step = _concat(_concat(frontier, redo, bound), do, bound)
        frontier = step - out
        out |= frontier
    return frozenset(out)


# -- nets -------------------------------------------------------------------

def _enabled(net, m, t):
    need = {}
    for p in net.transitions[t].inputs:
        need[p] = need.get(p, 0) + 1
    return all(m[p] >= k for p, k in need.items())


def _fire(net, m, t):
    m = list(m)
    for p in net.transitions[t].inputs:
        m[p] -= 1
    for p in net.transitions[t].outputs:
        m[p] += 1
    return tuple(m)


def net_language(net, bound: int, max_silent: int = 12) -> frozenset:
    """Visible traces (≤ ``bound``) leading from the initial to exactly the final marking."""
    fm = net.final_marking
    out = set()
    seen = set()
    stack = [(net.initial_marking, (), 0)]
    while stack:
        m, trace, silent_run = stack.pop()
        key = (m, trace, silent_run)
        if key in seen:
            continue
        seen.add(key)
        if m == fm:
            out.add(trace)
        for t, tr in enumerate(net.transitions):
            if not _enabled(net, m, t):
                continue
            m2 = _fire(net, m, t)
            if tr.label is None:
                if silent_run < max_silent:
                    stack.append((m2, trace, silent_run + 1))
            elif len(trace) < bound:
                stack.append((m2, trace + (tr.label,), 0))
    return frozenset(out)


def _silent_paths(net, length):
    silent = [t for t, tr in enumerate(net.transitions) if tr.label is None]
    return itertools.product(silent, repeat=length)


def _shortest_silent(net, m, goal, max_depth):
    """Iterative deepening over silent sequences; lexicographic order within a depth."""
    for depth in range(max_depth + 1):
        for path in _silent_paths(net, depth):
            cur = m
            ok = True
            for t in path:
                if not _enabled(net, cur, t):
                    ok = False
                    break
                cur = _fire(net, cur, t)
            if ok and goal(cur):
                return list(path), cur
    return None


def replay_trace(net, trace, max_depth: int = 6):
    """Token replay of one trace: ``(p, c, m, r)``."""
    m = net.initial_marking
    p = sum(m)
    c = miss = phantom = 0
    for a in trace:
        cands = [t for t, tr in enumerate(net.transitions) if tr.label == a]
        if not cands:
            p, c, miss, phantom = p + 1, c + 1, miss + 1, phantom + 1
            continue
        ready = [t for t in cands if _enabled(net, m, t)]
        if not ready:
            found = _shortest_silent(net, m, lambda mm: any(_enabled(net, mm, t) for t in cands), max_depth)
            if found is not None:
                path, m = found
                for t in path:
                    p += len(net.transitions[t].outputs)
                    c += len(net.transitions[t].inputs)
                ready = [t for t in cands if _enabled(net, m, t)]
        if ready:
            t = ready[0]
        else:
            def short(t):
                need = {}
                for q in net.transitions[t].inputs:
                    need[q] = need.get(q, 0) + 1
                return sum(max(0, k - m[q]) for q, k in need.items())
            t = min(cands, key=lambda t: (short(t), t))
            miss += short(t)
            ml = list(m)
            for q in net.transitions[t].inputs:
                ml[q] = max(ml[q], net.transitions[t].inputs.count(q))
            m = tuple(ml)
        p += len(net.transitions[t].outputs)
        c += len(net.transitions[t].inputs)
        m = _fire(net, m, t)
    fm = net.final_marking
    found = _shortest_silent(net, m, lambda mm: mm == fm, max_depth)
    if found is not None:
        path, m = found
        for t in path:
            p += len(net.transitions[t].outputs)
            c += len(net.transitions[t].inputs)
    ml = list(m)
    for q, k in enumerate(fm):
        c += k
        if ml[q] < k:
            miss += k - ml[q]
            ml[q] = 0
        else:
            ml[q] -= k
    return p, c, miss, sum(ml) + phantom


def fitness(net, log) -> Fraction:
    p = c = miss = r = 0
    for trace, mult in log:
        tp, tc, tm, tr = replay_trace(net, trace)
        p, c, miss, r = p + mult * tp, c + mult * tc, miss + mult * tm, r + mult * tr
    return Fraction(1, 2) * (1 - Fraction(miss, c)) + Fraction(1, 2) * (1 - Fraction(r, p))


def _closure(net, m, limit: int = 10_000):
    seen = {m}
    todo = [m]
    while todo:
        cur = todo.pop()
        for t, tr in enumerate(net.transitions):
            if tr.label is None and _enabled(net, cur, t):
                nxt = _fire(net, cur, t)
                if nxt not in seen and len(seen) < limit:
                    seen.add(nxt)
                    todo.append(nxt)
    return seen


def _allowed(net, m):
    return {
        tr.label
        for mm in _closure(net, m)
        for t, tr in enumerate(net.transitions)
        if tr.label is not None and _enabled(net, mm, t)
    }


def _replay_prefix(net, prefix):
    """Marking after a prefix, or None if some event needed a missing token."""
    m = net.initial_marking
    for a in prefix:
        cands = [t for t, tr in enumerate(net.transitions) if tr.label == a]
        if not cands:
            return None
        ready = [t for t in cands if _enabled(net, m, t)]
        if not ready:
            found = _shortest_silent(net, m, lambda mm: any(_enabled(net, mm, t) for t in cands), 6)
            if found is None:
                return None
            m = found[1]
            ready = [t for t in cands if _enabled(net, m, t)]
        m = _fire(net, m, ready[0])
    return m


def precision(net, log) -> Fraction:
    """ETC precision by enumerating every distinct prefix of the log."""
    weights: dict[tuple, int] = {}
    followers: dict[tuple, set] = {}
    for trace, mult in log:
        for i in range(len(trace) + 1):
            pre = tuple(trace[:i])
            weights[pre] = weights.get(pre, 0) + mult
            followers.setdefault(pre, set())
            if i < len(trace):
                followers[pre].add(trace[i])
    esc = allowed = 0
    for pre, w in weights.items():
        m = _replay_prefix(net, pre)
        if m is None:
            continue
        en = _allowed(net, m)
        allowed += w * len(en)
        esc += w * len(en - followers[pre])
    return Fraction(1) if allowed == 0 else 1 - Fraction(esc, allowed)
