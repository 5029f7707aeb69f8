# cython: language_level=3
"""Compiled match/scan kernels.

Hot inner loops of the engine: row-vs-query matching, full-partition scans,
one-dimensional bitmask scans, and kd-tree build/search over a linked node
pool. All loops release the GIL so partition fan-out over a thread pool
gives real parallelism.
"""

import numpy as np

from libc.stdint cimport int32_t, int64_t, uint8_t

MODE_SCALAR = 0
MODE_BLOCKED = 1
LANE = 8

BACKEND = "compiled"

DEF LANE_C = 8


cdef inline int _match_code(const float* v, const float* lo, const float* hi,
                            Py_ssize_t m, int mode) noexcept nogil:
    """1 = match, 0 = fail with every dimension evaluated, -1 = early break."""
    cdef Py_ssize_t j, b, k, base, blocks
    cdef int ok
    if mode == 0:
        for j in range(m):
            # bitwise | : both compares evaluate branchlessly, one branch per dim
            if (v[j] < lo[j]) | (v[j] > hi[j]):
                return -1 if j < m - 1 else 0
        return 1
    blocks = m // LANE_C
    for b in range(blocks):
        base = b * LANE_C
        ok = 1
        for k in range(LANE_C):
            # all 8 lanes evaluated before the block verdict
            ok = ok & (lo[base + k] <= v[base + k]) & (v[base + k] <= hi[base + k])
        if not ok:
            return -1 if base + LANE_C < m else 0
    for j in range(blocks * LANE_C, m):
        if (v[j] < lo[j]) | (v[j] > hi[j]):
            return -1 if j < m - 1 else 0
    return 1


def match_row(const float[::1] row, const float[::1] lower, const float[::1] upper, int mode):
    cdef Py_ssize_t m = row.shape[0]
    if lower.shape[0] != m or upper.shape[0] != m:
        raise ValueError(f"bound length {lower.shape[0]} does not match m={m}")
    if m == 0:
        return True
    return _match_code(&row[0], &lower[0], &upper[0], m, mode) == 1


def scan_rows(const float[:, ::1] values, const float[::1] lower,
              const float[::1] upper, int mode):
    """Scan all rows; returns (local ids ascending, objects compared, early breaks)."""
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t m = values.shape[1]
    if lower.shape[0] != m or upper.shape[0] != m:
        raise ValueError(f"bound length {lower.shape[0]} does not match m={m}")
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] ov = out
    cdef Py_ssize_t i, cnt = 0
    cdef int64_t early = 0
    cdef int code
    cdef const float* base
    cdef const float* lo
    cdef const float* hi
    if n == 0:
        return out[:0].copy(), 0, 0
    base = &values[0, 0]
    lo = &lower[0]
    hi = &upper[0]
    with nogil:
        for i in range(n):
            code = _match_code(base + i * m, lo, hi, m, mode)
            if code == 1:
                ov[cnt] = i
                cnt += 1
            elif code < 0:
                early += 1
    return out[:cnt].copy(), n, early


def scan_column(const float[::1] col, float lo, float hi, int mode):
    """One-dimensional range scan into a packed bitmask (little bit order)."""
    cdef Py_ssize_t n = col.shape[0]
    out = np.zeros((n + 7) // 8, dtype=np.uint8)
    cdef uint8_t[::1] ov = out
    cdef Py_ssize_t i, b, base, full
    cdef int k
    cdef uint8_t byte
    cdef float v
    if n == 0:
        return out
    with nogil:
        if mode == 0:
            for i in range(n):
                v = col[i]
                if lo <= v and v <= hi:
                    ov[i >> 3] |= <uint8_t>(1 << (i & 7))
        else:
            full = n >> 3
            for b in range(full):
                base = b << 3
                byte = 0
                for k in range(LANE_C):
                    v = col[base + k]
                    if lo <= v and v <= hi:
                        byte |= <uint8_t>(1 << k)
                ov[b] = byte
            for i in range(full << 3, n):
                v = col[i]
                if lo <= v and v <= hi:
                    ov[i >> 3] |= <uint8_t>(1 << (i & 7))
    return out


def kd_build(const float[:, ::1] values, int32_t[::1] left, int32_t[::1] right):
    """Link a node pool in insertion order; returns the maximum node depth."""
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t m = values.shape[1]
    cdef Py_ssize_t s, node, depth, d, max_depth = 0
    cdef int32_t nxt
    if left.shape[0] != n or right.shape[0] != n:
        raise ValueError("left/right arrays must have one slot per object")
    if n == 0:
        return 0
    with nogil:
        for s in range(n):
            left[s] = -1
            right[s] = -1
        for s in range(1, n):
            node = 0
            depth = 0
            while True:
                d = depth % m
                if values[s, d] <= values[node, d]:
                    nxt = left[node]
                    if nxt < 0:
                        left[node] = <int32_t>s
                        break
                else:
                    nxt = right[node]
                    if nxt < 0:
                        right[node] = <int32_t>s
                        break
                node = nxt
                depth += 1
            if depth + 1 > max_depth:
                max_depth = depth + 1
    return max_depth


def kd_search(const float[:, ::1] values, const int32_t[::1] left,
              const int32_t[::1] right, const float[::1] lower,
              const float[::1] upper, int mode, int max_depth):
    """Range search over a linked node pool.

    Returns (matching slot indices in traversal order, nodes visited).
    """
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t m = values.shape[1]
    if lower.shape[0] != m or upper.shape[0] != m:
        raise ValueError(f"bound length {lower.shape[0]} does not match m={m}")
    if n == 0:
        return np.empty(0, dtype=np.int32), 0
    out = np.empty(n, dtype=np.int32)
    snode = np.empty(max_depth + 2, dtype=np.int32)
    sdepth = np.empty(max_depth + 2, dtype=np.int32)
    cdef int32_t[::1] ov = out
    cdef int32_t[::1] sn = snode
    cdef int32_t[::1] sd = sdepth
    cdef Py_ssize_t cnt = 0, sp = 0
    cdef int64_t visited = 0
    cdef Py_ssize_t node, depth, d
    cdef int32_t child
    cdef float v
    with nogil:
        sn[0] = 0
        sd[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            node = sn[sp]
            depth = sd[sp]
            visited += 1
            d = depth % m
            if _match_code(&values[node, 0], &lower[0], &upper[0], m, mode) == 1:
                ov[cnt] = <int32_t>node
                cnt += 1
            v = values[node, d]
            child = left[node]
            if child >= 0 and lower[d] <= v:
                sn[sp] = child
                sd[sp] = <int32_t>(depth + 1)
                sp += 1
            child = right[node]
            if child >= 0 and upper[d] > v:
                sn[sp] = child
                sd[sp] = <int32_t>(depth + 1)
                sp += 1
    return out[:cnt].copy(), visited


def area_enlargements(const float[:, ::1] lows, const float[:, ::1] highs,
                      const float[::1] elow, const float[::1] ehigh):
    """Per-entry box area and its growth when union-ed with a new rect.

    Returns (enlargement float64[c], area float64[c]).
    """
    cdef Py_ssize_t c = lows.shape[0]
    cdef Py_ssize_t m = lows.shape[1]
    enl_np = np.empty(c, dtype=np.float64)
    areas_np = np.empty(c, dtype=np.float64)
    cdef double[::1] enl = enl_np
    cdef double[::1] areas = areas_np
    cdef Py_ssize_t i, d
    cdef double a, u, lo, hi
    with nogil:
        for i in range(c):
            a = 1.0
            u = 1.0
            for d in range(m):
                a *= <double>highs[i, d] - <double>lows[i, d]
                lo = elow[d] if elow[d] < lows[i, d] else lows[i, d]
                hi = ehigh[d] if ehigh[d] > highs[i, d] else highs[i, d]
                u *= <double>hi - <double>lo
            areas[i] = a
            enl[i] = u - a
    return enl_np, areas_np


def leaf_overlap_enlargements(const float[:, ::1] lows, const float[:, ::1] highs,
                              const float[::1] elow, const float[::1] ehigh,
                              const int64_t[::1] cand):
    """Growth of each candidate's total sibling overlap if it absorbs a rect.

    For candidate j: sum over siblings i != j of
    vol(union(r_j, e) intersect r_i) - vol(r_j intersect r_i).
    Pairs disjoint from the enlarged box contribute nothing and exit early.
    """
    cdef Py_ssize_t k = cand.shape[0]
    cdef Py_ssize_t c = lows.shape[0]
    cdef Py_ssize_t m = lows.shape[1]
    out_np = np.zeros(k, dtype=np.float64)
    enl_low_np = np.empty((k, m), dtype=np.float32)
    enl_high_np = np.empty((k, m), dtype=np.float32)
    cdef double[::1] out = out_np
    cdef float[:, ::1] enl_low = enl_low_np
    cdef float[:, ::1] enl_high = enl_high_np
    cdef Py_ssize_t jj, j, i, d
    cdef double acc, vol_new, vol_old, lo_n, hi_n, lo_o, hi_o, len_n, len_o
    cdef bint old_alive
    with nogil:
        for jj in range(k):
            j = cand[jj]
            for d in range(m):
                enl_low[jj, d] = elow[d] if elow[d] < lows[j, d] else lows[j, d]
                enl_high[jj, d] = ehigh[d] if ehigh[d] > highs[j, d] else highs[j, d]
        for jj in range(k):
            j = cand[jj]
            acc = 0.0
            for i in range(c):
                if i == j:
                    continue
                vol_new = 1.0
                vol_old = 1.0
                old_alive = 1
                for d in range(m):
                    lo_n = enl_low[jj, d] if enl_low[jj, d] > lows[i, d] else lows[i, d]
                    hi_n = enl_high[jj, d] if enl_high[jj, d] < highs[i, d] else highs[i, d]
                    len_n = <double>hi_n - <double>lo_n
                    if len_n <= 0.0:
                        # old intersection is a subset of the new one
                        vol_new = 0.0
                        old_alive = 0
                        break
                    vol_new *= len_n
                    if old_alive:
                        lo_o = lows[j, d] if lows[j, d] > lows[i, d] else lows[i, d]
                        hi_o = highs[j, d] if highs[j, d] < highs[i, d] else highs[i, d]
                        len_o = <double>hi_o - <double>lo_o
                        if len_o <= 0.0:
                            old_alive = 0
                        else:
                            vol_old *= len_o
                if not old_alive:
                    vol_old = 0.0
                acc += vol_new - vol_old
            out[jj] = acc
    return out_np


def mbr_intersect(const float[::1] low, const float[::1] high,
                  const float[::1] qlo, const float[::1] qhi, int mode):
    """Box-vs-query overlap test with the same block structure as match_row."""
    cdef Py_ssize_t m = low.shape[0]
    cdef Py_ssize_t j, b, blocks
    cdef int k
    cdef bint ok
    if high.shape[0] != m or qlo.shape[0] != m or qhi.shape[0] != m:
        raise ValueError("dimension mismatch")
    if m == 0:
        return True
    if mode == 0:
        for j in range(m):
            if qlo[j] > high[j] or qhi[j] < low[j]:
                return False
        return True
    blocks = m // LANE_C
    for b in range(blocks):
        ok = 1
        for k in range(LANE_C):
            j = b * LANE_C + k
            if not (qlo[j] <= high[j] and qhi[j] >= low[j]):
                ok = 0
        if not ok:
            return False
    for j in range(blocks * LANE_C, m):
        if qlo[j] > high[j] or qhi[j] < low[j]:
            return False
    return True
