"""Pure-Python match/scan kernels.

Semantically identical to the compiled `mdrq._kernels_cy` extension and used
as the fallback when the extension is unavailable (or when MDRQ_BACKEND=py).
Orders of magnitude slower; correctness and portability are the point here,
the compiled module is the one meant for timed runs.
"""

from __future__ import annotations

import numpy as np

MODE_SCALAR = 0
MODE_BLOCKED = 1
LANE = 8

BACKEND = "python"


def _match(row, lower, upper, m: int, mode: int) -> tuple[bool, int]:
    """Return (matched, dims tested). Lists in, scalar comparisons inside."""
    if mode == MODE_SCALAR:
        tested = 0
        for j in range(m):
            tested += 1
            v = row[j]
            if v < lower[j] or v > upper[j]:
                return False, tested
        return True, tested
    blocks = m // LANE
    tested = 0
    for b in range(blocks):
        base = b * LANE
        ok = True
        for k in range(LANE):
            j = base + k
            # all 8 lanes are evaluated before the block verdict
            if not (lower[j] <= row[j] <= upper[j]):
                ok = False
        tested += LANE
        if not ok:
            return False, tested
    for j in range(blocks * LANE, m):
        tested += 1
        v = row[j]
        if v < lower[j] or v > upper[j]:
            return False, tested
    return True, tested


def match_row(row, lower, upper, mode: int) -> bool:
    r = np.asarray(row).tolist()
    lo = np.asarray(lower).tolist()
    hi = np.asarray(upper).tolist()
    matched, _ = _match(r, lo, hi, len(r), mode)
    return matched


def scan_rows(values, lower, upper, mode: int):
    """Scan all rows; returns (local ids ascending, objects compared, early breaks)."""
    vals = np.asarray(values)
    n, m = vals.shape
    if len(lower) != m or len(upper) != m:
        raise ValueError(f"bound length {len(lower)} does not match m={m}")
    rows = vals.tolist()
    lo = np.asarray(lower).tolist()
    hi = np.asarray(upper).tolist()
    ids = []
    early = 0
    for i in range(n):
        matched, tested = _match(rows[i], lo, hi, m, mode)
        if matched:
            ids.append(i)
        elif tested < m:
            early += 1
    return np.asarray(ids, dtype=np.int64), n, early


def scan_column(col, lo: float, hi: float, mode: int) -> np.ndarray:
    """One-dimensional range scan into a packed bitmask (little bit order)."""
    values = np.asarray(col).tolist()
    n = len(values)
    out = bytearray((n + 7) // 8)
    lo = float(lo)
    hi = float(hi)
    if mode == MODE_SCALAR:
        for i in range(n):
            if lo <= values[i] <= hi:
                out[i >> 3] |= 1 << (i & 7)
    else:
        full = n >> 3
        for b in range(full):
            base = b << 3
            byte = 0
            for k in range(LANE):
                if lo <= values[base + k] <= hi:
                    byte |= 1 << k
            out[b] = byte
        for i in range(full << 3, n):
            if lo <= values[i] <= hi:
                out[i >> 3] |= 1 << (i & 7)
    return np.frombuffer(bytes(out), dtype=np.uint8)


def kd_build(values, left, right) -> int:
    """Link a node pool in insertion order (slot s = s-th inserted object).

    left/right are int32 arrays overwritten in place; returns the maximum
    node depth (root is depth 0).
    """
    vals = np.asarray(values)
    n, m = vals.shape
    left[:] = -1
    right[:] = -1
    if n == 0:
        return 0
    rows = vals.tolist()
    lf = left
    rt = right
    max_depth = 0
    for s in range(1, n):
        row = rows[s]
        node = 0
        depth = 0
        while True:
            d = depth % m
            if row[d] <= rows[node][d]:
                nxt = lf[node]
                if nxt < 0:
                    lf[node] = s
                    break
            else:
                nxt = rt[node]
                if nxt < 0:
                    rt[node] = s
                    break
            node = nxt
            depth += 1
        if depth + 1 > max_depth:
            max_depth = depth + 1
    return max_depth


def kd_search(values, left, right, lower, upper, mode: int, max_depth: int):
    """Range search over a linked node pool.

    Returns (matching slot indices in traversal order, nodes visited).
    """
    vals = np.asarray(values)
    n, m = vals.shape
    if n == 0:
        return np.empty(0, dtype=np.int32), 0
    rows = vals.tolist()
    lo = np.asarray(lower).tolist()
    hi = np.asarray(upper).tolist()
    lf = left.tolist()
    rt = right.tolist()
    out = []
    visited = 0
    stack = [(0, 0)]
    while stack:
        node, depth = stack.pop()
        visited += 1
        d = depth % m
        matched, _ = _match(rows[node], lo, hi, m, mode)
        if matched:
            out.append(node)
        v = rows[node][d]
        l = lf[node]
        if l >= 0 and lo[d] <= v:
            stack.append((l, depth + 1))
        r = rt[node]
        if r >= 0 and hi[d] > v:
            stack.append((r, depth + 1))
    return np.asarray(out, dtype=np.int32), visited


def area_enlargements(lows, highs, elow, ehigh):
    """Per-entry box area and its growth when union-ed with a new rect."""
    l64 = np.asarray(lows, dtype=np.float64)
    h64 = np.asarray(highs, dtype=np.float64)
    e_lo = np.asarray(elow, dtype=np.float64)
    e_hi = np.asarray(ehigh, dtype=np.float64)
    areas = np.prod(h64 - l64, axis=-1)
    union = np.prod(np.maximum(h64, e_hi) - np.minimum(l64, e_lo), axis=-1)
    return union - areas, areas


def leaf_overlap_enlargements(lows, highs, elow, ehigh, cand):
    """Growth of each candidate's total sibling overlap if it absorbs a rect."""
    l64 = np.asarray(lows, dtype=np.float64)
    h64 = np.asarray(highs, dtype=np.float64)
    cand = np.asarray(cand, dtype=np.int64)
    el = np.minimum(l64[cand], np.asarray(elow, dtype=np.float64))
    eh = np.maximum(h64[cand], np.asarray(ehigh, dtype=np.float64))
    vol_new = np.prod(
        np.clip(np.minimum(eh[:, None, :], h64[None, :, :])
                - np.maximum(el[:, None, :], l64[None, :, :]), 0.0, None),
        axis=-1)
    vol_old = np.prod(
        np.clip(np.minimum(h64[cand][:, None, :], h64[None, :, :])
                - np.maximum(l64[cand][:, None, :], l64[None, :, :]), 0.0, None),
        axis=-1)
    diff = vol_new - vol_old
    total = diff.sum(axis=1)
    # the self term is zero mathematically; drop it to mirror the compiled loop
    total -= diff[np.arange(cand.size), cand]
    return total


def mbr_intersect(low, high, qlo, qhi, mode: int) -> bool:
    """Box-vs-query overlap test with the same block structure as match_row."""
    lo_ = np.asarray(low).tolist()
    hi_ = np.asarray(high).tolist()
    qlo_ = np.asarray(qlo).tolist()
    qhi_ = np.asarray(qhi).tolist()
    m = len(lo_)
    if mode == MODE_SCALAR:
        for j in range(m):
            if qlo_[j] > hi_[j] or qhi_[j] < lo_[j]:
                return False
        return True
    blocks = m // LANE
    for b in range(blocks):
        ok = True
        for k in range(LANE):
            j = b * LANE + k
            if not (qlo_[j] <= hi_[j] and qhi_[j] >= lo_[j]):
                ok = False
        if not ok:
            return False
    for j in range(blocks * LANE, m):
        if qlo_[j] > hi_[j] or qhi_[j] < lo_[j]:
            return False
    return True
