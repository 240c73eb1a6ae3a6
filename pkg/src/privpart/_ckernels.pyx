# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; semantics mirror ``_pykernels`` exactly.

Markings are ``bytes`` objects holding ``int32`` token counts so they can be
hashed for the breadth-first searches, while all arithmetic on them runs on
typed pointers.
"""

import numpy as np
cimport numpy as cnp
from libc.string cimport memcpy

cnp.import_array()

UNKNOWN = -2
SILENT = -1


def df_matrix(const int[:] flat, const long long[:] offsets, const long long[:] mult, int n):
    out = np.zeros((n + 1, n + 1), dtype=np.int64)
    cdef long long[:, :] o = out
    cdef Py_ssize_t i, k, lo, hi
    cdef int prev, cur
    cdef long long m
    for i in range(mult.shape[0]):
        lo = offsets[i]
        hi = offsets[i + 1]
        m = mult[i]
        if lo == hi:
            o[n, n] += m
            continue
        prev = n
        for k in range(lo, hi):
            cur = flat[k]
            o[prev, cur] += m
            prev = cur
        o[prev, n] += m
    return out


def walk_batch(const double[:, :] cum, const double[:, :] uniforms, int max_len):
    cdef int n = cum.shape[0] - 1
    cdef Py_ssize_t rows = uniforms.shape[0]
    codes_arr = np.full((rows, max_len), -1, dtype=np.int32)
    lengths_arr = np.zeros(rows, dtype=np.int32)
    cdef int[:, :] codes = codes_arr
    cdef int[:] lengths = lengths_arr
    cdef Py_ssize_t i
    cdef int cur, length, step, j
    cdef double u
    with nogil:
        for i in range(rows):
            cur = n
            length = 0
            step = 0
            while True:
                if cum[cur, n] <= 0.0:
                    break
                u = uniforms[i, step]
                step += 1
                j = 0
                while j < n and u >= cum[cur, j]:
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
    return codes_arr, lengths_arr


cdef class _CNet:
    cdef int n_p, n_t, n_lab
    cdef long long max_states
    cdef int[:] pre_ptr, pre_place, pre_count
    cdef int[:] post_ptr, post_place, post_count
    cdef int[:] tok_pre, tok_post
    cdef int[:] lab_ptr, lab_idx
    cdef int[:] silent
    cdef int n_silent
    cdef bytes im, fm
    cdef int im_total

    def __init__(self, net):
        pre_ptr = np.asarray(net.pre_ptr).tolist()
        pre_idx = np.asarray(net.pre_idx).tolist()
        post_ptr = np.asarray(net.post_ptr).tolist()
        post_idx = np.asarray(net.post_idx).tolist()
        labels = np.asarray(net.labels).tolist()
        self.n_t = len(pre_ptr) - 1
        im = np.asarray(net.im, dtype=np.int32)
        fm = np.asarray(net.fm, dtype=np.int32)
        self.n_p = im.shape[0]
        self.max_states = int(net.max_states)
        self.pre_ptr, self.pre_place, self.pre_count, self.tok_pre = _aggregate(pre_ptr, pre_idx, self.n_t)
        self.post_ptr, self.post_place, self.post_count, self.tok_post = _aggregate(post_ptr, post_idx, self.n_t)
        self.lab_ptr = np.asarray(net.label_ptr, dtype=np.int32)
        self.lab_idx = np.asarray(net.label_idx, dtype=np.int32)
        self.n_lab = self.lab_ptr.shape[0] - 1
        self.silent = np.array([t for t in range(self.n_t) if labels[t] == SILENT], dtype=np.int32)
        self.n_silent = self.silent.shape[0]
        self.im = im.tobytes()
        self.fm = fm.tobytes()
        self.im_total = int(im.sum())

    cdef inline bint enabled(self, const int* m, int t):
        cdef int a
        for a in range(self.pre_ptr[t], self.pre_ptr[t + 1]):
            if m[self.pre_place[a]] < self.pre_count[a]:
                return False
        return True

    cdef bytes fire(self, const int* m, int t):
        cdef bytearray buf = bytearray(self.n_p * 4)
        cdef int* out = <int*> (<char*> buf)
        cdef int a
        if self.n_p:
            memcpy(out, m, self.n_p * 4)
        for a in range(self.pre_ptr[t], self.pre_ptr[t + 1]):
            out[self.pre_place[a]] -= self.pre_count[a]
        for a in range(self.post_ptr[t], self.post_ptr[t + 1]):
            out[self.post_place[a]] += self.post_count[a]
        return bytes(buf)

    cdef bint any_enabled(self, const int* m, int code):
        cdef int k
        for k in range(self.lab_ptr[code], self.lab_ptr[code + 1]):
            if self.enabled(m, self.lab_idx[k]):
                return True
        return False

    cdef object silent_search(self, bytes m0, int code):
        """Shortest silent path to a marking enabling ``code`` (or the final marking if code < 0)."""
        if self.goal(m0, code):
            return [], m0
        parent = {m0: None}
        queue = [m0]
        cdef Py_ssize_t head = 0
        cdef int s, t
        cdef bytes m, m2
        cdef const int* mp
        while head < len(queue):
            m = queue[head]
            head += 1
            mp = <const int*> (<const char*> m)
            for s in range(self.n_silent):
                t = self.silent[s]
                if not self.enabled(mp, t):
                    continue
                m2 = self.fire(mp, t)
                if m2 in parent:
                    continue
                parent[m2] = (m, t)
                if self.goal(m2, code):
                    path = []
                    cur = m2
                    while parent[cur] is not None:
                        prev, tt = parent[cur]
                        path.append(tt)
                        cur = prev
                    path.reverse()
                    return path, m2
                if len(parent) >= self.max_states:
                    return None
                queue.append(m2)
        return None

    cdef bint goal(self, bytes m, int code):
        if code < 0:
            return m == self.fm
        return self.any_enabled(<const int*> (<const char*> m), code)

    cdef bytes fire_label(self, bytes m, int code, long long* acc):
        cdef const int* mp = <const int*> (<const char*> m)
        cdef int k, t, a, best, best_missing, missing, need, have
        if code < 0 or code >= self.n_lab or self.lab_ptr[code] == self.lab_ptr[code + 1]:
            acc[0] += 1
            acc[1] += 1
            acc[2] += 1
            acc[3] += 1
            return m
        for k in range(self.lab_ptr[code], self.lab_ptr[code + 1]):
            t = self.lab_idx[k]
            if self.enabled(mp, t):
                acc[0] += self.tok_post[t]
                acc[1] += self.tok_pre[t]
                return self.fire(mp, t)
        found = self.silent_search(m, code)
        if found is not None:
            path, m = found
            for t in path:
                acc[0] += self.tok_post[t]
                acc[1] += self.tok_pre[t]
            mp = <const int*> (<const char*> m)
            for k in range(self.lab_ptr[code], self.lab_ptr[code + 1]):
                t = self.lab_idx[k]
                if self.enabled(mp, t):
                    acc[0] += self.tok_post[t]
                    acc[1] += self.tok_pre[t]
                    return self.fire(mp, t)
        best = -1
        best_missing = -1
        for k in range(self.lab_ptr[code], self.lab_ptr[code + 1]):
            t = self.lab_idx[k]
            missing = 0
            for a in range(self.pre_ptr[t], self.pre_ptr[t + 1]):
                have = mp[self.pre_place[a]]
                need = self.pre_count[a]
                if have < need:
                    missing += need - have
            if best < 0 or missing < best_missing:
                best = t
                best_missing = missing
        cdef bytearray buf = bytearray(m)
        cdef int* ml = <int*> (<char*> buf)
        for a in range(self.pre_ptr[best], self.pre_ptr[best + 1]):
            if ml[self.pre_place[a]] < self.pre_count[a]:
                ml[self.pre_place[a]] = self.pre_count[a]
        acc[2] += best_missing
        acc[0] += self.tok_post[best]
        acc[1] += self.tok_pre[best]
        return self.fire(ml, best)

    cdef long long finish(self, bytes m, long long* acc):
        found = self.silent_search(m, -1)
        cdef int t, p
        if found is not None:
            path, m = found
            for t in path:
                acc[0] += self.tok_post[t]
                acc[1] += self.tok_pre[t]
        cdef const int* mp = <const int*> (<const char*> m)
        cdef const int* fp = <const int*> (<const char*> self.fm)
        cdef long long rem = 0
        cdef int k, have
        for p in range(self.n_p):
            k = fp[p]
            have = mp[p]
            if k:
                acc[1] += k
                if have < k:
                    acc[2] += k - have
                    have = 0
                else:
                    have -= k
            rem += have
        return rem + acc[3]

    cdef set closure_labels(self, bytes m):
        seen = {m}
        queue = [m]
        labels = set()
        cdef Py_ssize_t head = 0
        cdef int code, s, t
        cdef bytes mm, m2
        cdef const int* mp
        while head < len(queue):
            mm = queue[head]
            head += 1
            mp = <const int*> (<const char*> mm)
            for code in range(self.n_lab):
                if code in labels:
                    continue
                if self.any_enabled(mp, code):
                    labels.add(code)
            for s in range(self.n_silent):
                t = self.silent[s]
                if self.enabled(mp, t):
                    m2 = self.fire(mp, t)
                    if m2 not in seen and len(seen) < self.max_states:
                        seen.add(m2)
                        queue.append(m2)
        return labels


def _aggregate(ptr, idx, n_t):
    """Per-transition (place, multiplicity) arcs sorted by place, plus token totals."""
    out_ptr = [0]
    places = []
    counts = []
    totals = []
    for t in range(n_t):
        c = {}
        for p in idx[ptr[t]:ptr[t + 1]]:
            c[p] = c.get(p, 0) + 1
        for p in sorted(c):
            places.append(p)
            counts.append(c[p])
        out_ptr.append(len(places))
        totals.append(sum(c.values()))
    as32 = lambda x: np.asarray(x, dtype=np.int32)
    return as32(out_ptr), as32(places), as32(counts), as32(totals)


def replay_traces(net, const int[:] flat, const long long[:] offsets):
    cdef _CNet c = _CNet(net)
    cdef Py_ssize_t n = offsets.shape[0] - 1
    out_arr = np.zeros((n, 4), dtype=np.int64)
    cdef long long[:, :] out = out_arr
    cdef long long acc[4]
    cdef Py_ssize_t i, k
    cdef bytes m
    cdef long long r
    for i in range(n):
        acc[0] = c.im_total
        acc[1] = 0
        acc[2] = 0
        acc[3] = 0
        m = c.im
        for k in range(offsets[i], offsets[i + 1]):
            m = c.fire_label(m, flat[k], acc)
        r = c.finish(m, acc)
        out[i, 0] = acc[0]
        out[i, 1] = acc[1]
        out[i, 2] = acc[2]
        out[i, 3] = r
    return out_arr


def escaping_edges(net, const long long[:] parent, const int[:] label, const long long[:] weight,
                   const long long[:] child_ptr, const int[:] child_label):
    cdef _CNet c = _CNet(net)
    cdef Py_ssize_t n = parent.shape[0]
    markings = [None] * n
    cdef object escaping = 0
    cdef object allowed = 0
    cdef long long acc[4]
    cdef Py_ssize_t s, k
    cdef long long w
    for s in range(n):
        if s == 0:
            m = c.im
        else:
            pm = markings[parent[s]]
            if pm is None:
                continue
            acc[0] = 0
            acc[1] = 0
            acc[2] = 0
            acc[3] = 0
            m = c.fire_label(pm, label[s], acc)
            if acc[2]:
                continue
        markings[s] = m
        enabled = c.closure_labels(m)
        if not enabled:
            continue
        reflected = set()
        for k in range(child_ptr[s], child_ptr[s + 1]):
            reflected.add(child_label[k])
        w = weight[s]
        allowed += w * len(enabled)
        escaping += w * len(enabled - reflected)
    return escaping, allowed
