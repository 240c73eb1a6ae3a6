"""Pure-Python kernels.

Reference semantics for the compiled ``_ckernels`` module; both must agree
bit-for-bit.  All inputs are the integer encodings produced by
:mod:`privpart.log` and :class:`privpart.discovery.petri.CompiledNet`.
"""

from __future__ import annotations

from collections import deque

import numpy as np

UNKNOWN = -2
SILENT = -1


def df_matrix(flat, offsets, mult, n):
    out = np.zeros((n + 1, n + 1), dtype=np.int64)
    flat = flat.tolist()
    offsets = offsets.tolist()
    mult = mult.tolist()
    counts = {}
    for i in range(len(mult)):
        lo, hi = offsets[i], offsets[i + 1]
        if lo == hi:
            key = (n, n)
            counts[key] = counts.get(key, 0) + mult[i]
            continue
        m = mult[i]
        prev = n
        for k in range(lo, hi):
            cur = flat[k]
            key = (prev, cur)
            counts[key] = counts.get(key, 0) + m
            prev = cur
        key = (prev, n)
        counts[key] = counts.get(key, 0) + m
    for (i, j), c in counts.items():
        out[i, j] = c
    return out


def walk_batch(cum, uniforms, max_len):
    """Random walks over a row-stochastic cumulative matrix.

    Row ``n`` of ``cum`` is ▶, column ``n`` is ■.  A row whose last entry is 0
    is a dead end and terminates the walk.  Returns ``(codes, lengths)``;
    ``lengths[i] == -1`` marks a walk that did not reach ■ within ``max_len``
    events (its first ``max_len`` codes are filled).
    """
    n = cum.shape[0] - 1
    rows = uniforms.shape[0]
    codes = np.full((rows, max_len), -1, dtype=np.int32)
    lengths = np.zeros(rows, dtype=np.int32)
    cum_rows = cum.tolist()
    for i in range(rows):
        u_row = uniforms[i].tolist()
        cur = n
        length = 0
        step = 0
        while True:
            row = cum_rows[cur]
            if row[n] <= 0.0:
                break
            u = u_row[step]
            step += 1
            j = 0
            while j < n and u >= row[j]:
                j += 1
            if j == n:
                break
            if length == max_len:
                length = -1
                break
            codes[i, length] = j
            length += 1
            cur = j
        lengths[i] = length
    return codes, lengths


class _Net:
    """List-based view of a CompiledNet for the pure-Python replay loop."""

    __slots__ = ("pre", "post", "labels", "by_label", "silent", "im", "fm", "max_states")

    def __init__(self, net):
        pre_ptr, pre_idx = net.pre_ptr.tolist(), net.pre_idx.tolist()
        post_ptr, post_idx = net.post_ptr.tolist(), net.post_idx.tolist()
        n_t = len(pre_ptr) - 1
        self.pre = [_arc_counts(pre_idx[pre_ptr[t]:pre_ptr[t + 1]]) for t in range(n_t)]
        self.post = [_arc_counts(post_idx[post_ptr[t]:post_ptr[t + 1]]) for t in range(n_t)]
        self.labels = net.labels.tolist()
        lab_ptr, lab_idx = net.label_ptr.tolist(), net.label_idx.tolist()
        self.by_label = [lab_idx[lab_ptr[k]:lab_ptr[k + 1]] for k in range(len(lab_ptr) - 1)]
        self.silent = [t for t in range(n_t) if self.labels[t] == SILENT]
        self.im = tuple(net.im.tolist())
        self.fm = tuple(net.fm.tolist())
        self.max_states = int(net.max_states)


def _arc_counts(places):
    counts = {}
    for p in places:
        counts[p] = counts.get(p, 0) + 1
    return tuple(sorted(counts.items()))


def _enabled(m, arcs):
    for p, k in arcs:
        if m[p] < k:
            return False
    return True


def _fire(m, pre, post):
    m = list(m)
    for p, k in pre:
        m[p] -= k
    for p, k in post:
        m[p] += k
    return tuple(m)


def _tokens(arcs):
    return sum(k for _, k in arcs)


def _silent_search(net, m0, goal):
    """Shortest silent firing sequence from ``m0`` to a marking satisfying ``goal``.

    Breadth-first, silent transitions tried in index order, so the sequence
    returned is the lexicographically smallest among the shortest ones.
    Returns ``(path, marking)`` or ``None`` (also when ``max_states`` is hit).
    """
    if goal(m0):
        return [], m0
    parent = {m0: None}
    queue = deque([m0])
    while queue:
        m = queue.popleft()
        for t in net.silent:
            pre = net.pre[t]
            if not _enabled(m, pre):
                continue
            m2 = _fire(m, pre, net.post[t])
            if m2 in parent:
                continue
            parent[m2] = (m, t)
            if goal(m2):
                path = []
                cur = m2
                while parent[cur] is not None:
                    prev, tt = parent[cur]
                    path.append(tt)
                    cur = prev
                path.reverse()
                return path, m2
            if len(parent) >= net.max_states:
                return None
            queue.append(m2)
    return None


def _fire_label(net, m, code, acc):
    """Replay one event; ``acc`` is ``[produced, consumed, missing, phantom]``."""
    if code < 0 or code >= len(net.by_label) or not net.by_label[code]:
        acc[0] += 1
        acc[1] += 1
        acc[2] += 1
        acc[3] += 1
        return m
    cands = net.by_label[code]
    for t in cands:
        if _enabled(m, net.pre[t]):
            acc[0] += _tokens(net.post[t])
            acc[1] += _tokens(net.pre[t])
            return _fire(m, net.pre[t], net.post[t])

    def goal(mm):
        for t in cands:
            if _enabled(mm, net.pre[t]):
                return True
        return False

    found = _silent_search(net, m, goal)
    if found is not None:
        path, m = found
        for t in path:
            acc[0] += _tokens(net.post[t])
            acc[1] += _tokens(net.pre[t])
        for t in cands:
            if _enabled(m, net.pre[t]):
                acc[0] += _tokens(net.post[t])
                acc[1] += _tokens(net.pre[t])
                return _fire(m, net.pre[t], net.post[t])
    best = -1
    best_missing = -1
    for t in cands:
        missing = 0
        for p, k in net.pre[t]:
            if m[p] < k:
                missing += k - m[p]
        if best < 0 or missing < best_missing:
            best, best_missing = t, missing
    ml = list(m)
    for p, k in net.pre[best]:
        if ml[p] < k:
            ml[p] = k
    acc[2] += best_missing
    acc[0] += _tokens(net.post[best])
    acc[1] += _tokens(net.pre[best])
    return _fire(tuple(ml), net.pre[best], net.post[best])


def _finish(net, m, acc):
    fm = net.fm
    found = _silent_search(net, m, lambda mm: mm == fm)
    if found is not None:
        path, m = found
        for t in path:
            acc[0] += _tokens(net.post[t])
            acc[1] += _tokens(net.pre[t])
    ml = list(m)
    for p, k in enumerate(fm):
        if k:
            acc[1] += k
            if ml[p] < k:
                acc[2] += k - ml[p]
                ml[p] = 0
            else:
                ml[p] -= k
    return sum(ml) + acc[3]


def _closure_labels(net, m):
    seen = {m}
    queue = deque([m])
    labels = set()
    while queue:
        mm = queue.popleft()
        for code, cands in enumerate(net.by_label):
            if code in labels:
                continue
            for t in cands:
                if _enabled(mm, net.pre[t]):
                    labels.add(code)
                    break
        for t in net.silent:
            pre = net.pre[t]
            if _enabled(mm, pre):
                m2 = _fire(mm, pre, net.post[t])
                if m2 not in seen and len(seen) < net.max_states:
                    seen.add(m2)
                    queue.append(m2)
    return labels


def replay_traces(net, flat, offsets):
    """Token replay of each encoded trace; rows of ``(p, c, m, r)``."""
    cnet = _Net(net)
    flat = flat.tolist()
    offsets = offsets.tolist()
    n = len(offsets) - 1
    out = np.zeros((n, 4), dtype=np.int64)
    for i in range(n):
        acc = [sum(cnet.im), 0, 0, 0]
        m = cnet.im
        for k in range(offsets[i], offsets[i + 1]):
            m = _fire_label(cnet, m, flat[k], acc)
        r = _finish(cnet, m, acc)
        out[i, 0], out[i, 1], out[i, 2], out[i, 3] = acc[0], acc[1], acc[2], r
    return out


def escaping_edges(net, parent, label, weight, child_ptr, child_label):
    """Weighted escaping/allowed totals over a prefix automaton.

    Nodes are topologically ordered (parents first); node 0 is the empty
    prefix.  ``child_label[child_ptr[s]:child_ptr[s+1]]`` are the activity
    codes observed after prefix ``s``.  Prefixes whose replay needs a missing
    token are skipped together with their extensions.
    """
    cnet = _Net(net)
    parent = parent.tolist()
    label = label.tolist()
    weight = weight.tolist()
    child_ptr = child_ptr.tolist()
    child_label = child_label.tolist()
    n = len(parent)
    markings = [None] * n
    escaping = 0
    allowed = 0
    for s in range(n):
        if s == 0:
            m = cnet.im
        else:
            pm = markings[parent[s]]
            if pm is None:
                continue
            acc = [0, 0, 0, 0]
            m = _fire_label(cnet, pm, label[s], acc)
            if acc[2]:
                continue
        markings[s] = m
        enabled = _closure_labels(cnet, m)
        if not enabled:
            continue
        reflected = set(child_label[child_ptr[s]:child_ptr[s + 1]])
        w = weight[s]
        allowed += w * len(enabled)
        escaping += w * len(enabled - reflected)
    return escaping, allowed
