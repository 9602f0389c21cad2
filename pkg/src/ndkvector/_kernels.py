"""Compiled inner loops.

Everything that touches individual points lives here so that the k-vector
searches and the baselines are timed on equal (compiled) footing.  The public
modules wrap these with validation and result bookkeeping.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True)

LINEAR = 0
BINARY = 1
# first capacity of a result buffer; grown by doubling
_INITIAL = 256


# ---------------------------------------------------------------- k-vector


@njit(**_JIT)
def fill_kvector(values, lo, hi, m, q, constant, start, out):
    n_k = out.size
    if constant:
        for i in range(n_k - 1):
            out[i] = start
        out[n_k - 1] = start + (hi - lo)
        return
    ptr = lo
    for i in range(n_k):
        z = i / m - q / m
        while ptr < hi and values[ptr] < z:
            ptr += 1
        out[i] = start + (ptr - lo)


@njit(**_JIT)
def fill_kvector_all(col, starts, m, q, constant, out):
    for s in range(starts.size - 1):
        fill_kvector(col, starts[s], starts[s + 1], m[s], q[s], constant[s], starts[s], out[s])


@njit(**_JIT)
def map_range(m, q, constant, cmin, n_k, a, b):
    """Grid cells ``(A, B, empty)`` with ``z(A) <= a < z(A+1)`` and ``z(B-1) <= b < z(B)``.

    The floor estimate is corrected against ``z`` computed exactly as at build
    time, so rounding can never drop a boundary element.
    """
    last = n_k - 1
    if constant:
        if a <= cmin and cmin <= b:
            return 0, last, False
        return 0, 0, True
    ta = m * a + q
    tb = m * b + q
    if ta < 0.0:
        A = 0
    elif ta >= last:
        A = last
    else:
        A = int(math.floor(ta))
    if tb < 0.0:
        B = 0
    elif tb >= last:
        B = last
    else:
        B = int(math.floor(tb)) + 1
        if B > last:
            B = last
    while A > 0 and A / m - q / m > a:
        A -= 1
    while A < last and (A + 1) / m - q / m <= a:
        A += 1
    while B < last and B / m - q / m <= b:
        B += 1
    while B > 0 and (B - 1) / m - q / m > b:
        B -= 1
    if B == 0 or A == last:
        return A, B, True
    return A, B, False


@njit(**_JIT)
def trim_mode(count, expected, threshold):
    if count <= threshold * expected:
        return LINEAR
    return BINARY


@njit(**_JIT)
def _value(points, index, j, i):
    if j == 0:
        return points[i, 0]
    return points[index[j - 1, i], j]


@njit(**_JIT)
def lower_bound(points, index, j, lo, hi, a):
    """First position in ``[lo, hi)`` of the dim-``j`` sorted view with value >= a."""
    steps = 0
    while lo < hi:
        mid = (lo + hi) >> 1
        steps += 1
        if _value(points, index, j, mid) < a:
            lo = mid + 1
        else:
            hi = mid
    return lo, steps


@njit(**_JIT)
def upper_bound(points, index, j, lo, hi, b):
    """First position in ``[lo, hi)`` of the dim-``j`` sorted view with value > b."""
    steps = 0
    while lo < hi:
        mid = (lo + hi) >> 1
        steps += 1
        if _value(points, index, j, mid) <= b:
            lo = mid + 1
        else:
            hi = mid
    return lo, steps


@njit(**_JIT)
def trim_window(points, index, j, kv, A, B, a, b, expected, threshold, force):
    """Exact ``[lo, hi)`` of values in ``[a, b]`` inside the k-vector window.

    ``force`` is -1 for automatic per-boundary mode selection, else LINEAR or
    BINARY.  Returns ``(lo, hi, steps, lower_mode, upper_mode)``.
    """
    lo = kv[A]
    hi = kv[B]
    steps = 0
    if lo >= hi:
        return lo, lo, 0, LINEAR, LINEAR
    mode_lo = force
    if force < 0:
        mode_lo = trim_mode(kv[A + 1] - kv[A], expected, threshold)
    if mode_lo == LINEAR:
        while lo < hi:
            steps += 1
            if _value(points, index, j, lo) >= a:
                break
            lo += 1
    else:
        cap = kv[A + 1]
        if cap > hi:
            cap = hi
        lo, s = lower_bound(points, index, j, lo, cap, a)
        steps += s
    mode_hi = force
    if force < 0:
        mode_hi = trim_mode(kv[B] - kv[B - 1], expected, threshold)
    if mode_hi == LINEAR:
        while hi > lo:
            steps += 1
            if _value(points, index, j, hi - 1) <= b:
                break
            hi -= 1
    else:
        floor_ = kv[B - 1]
        if floor_ < lo:
            floor_ = lo
        hi, s = upper_bound(points, index, j, floor_, hi, b)
        steps += s
    return lo, hi, steps, mode_lo, mode_hi


@njit(**_JIT)
def projection_ratio(n_p, slope, offset):
    if n_p <= 0:
        return 1.0
    r = slope * (math.log10(n_p) - offset)
    if r < 1.0:
        return 1.0
    return r


@njit(**_JIT)
def choose_dimension(p, r):
    best = 0
    for j in range(1, p.size):
        if p[j] < p[best]:
            best = j
    if p[0] > r * p[best]:
        return best
    return 0


@njit(**_JIT)
def order_into(p, skip, drop, order):
    """Fill ``order`` with the dimensions other than ``skip`` and ``drop``.

    Dimensions come out in ascending ``p`` with ties broken by lower index;
    pass ``drop = -1`` to keep every dimension but ``skip``.  Returns how many
    entries were written.
    """
    c = 0
    for j in range(p.size):
        if j == skip or j == drop:
            continue
        k = c - 1
        while k >= 0 and p[order[k]] > p[j]:
            order[k + 1] = order[k]
            k -= 1
        order[k + 1] = j
        c += 1
    return c


@njit(**_JIT)
def check_order(p, skip):
    """Dimensions other than ``skip`` in ascending ``p``; ties by lower index."""
    order = np.empty(max(p.size - 1, 0), dtype=np.int64)
    order_into(p, skip, -1, order)
    return order


@njit(**_JIT)
def _verify(points, row, order, n_check, qlo, qhi):
    for t in range(n_check):
        c = order[t]
        v = points[row, c]
        if v < qlo[c] or v > qhi[c]:
            return False
    return True


@njit(**_JIT)
def _reserve(buf, count, extra):
    """Return ``buf`` or a larger copy with room for ``extra`` more entries."""
    need = count + extra
    if need <= buf.size:
        return buf
    grown = np.empty(max(need, 2 * buf.size), dtype=np.int64)
    grown[:count] = buf[:count]
    return grown


@njit(**_JIT)
def _result(perm, out, count):
    """Stack original ids over structured indexes as a ``(2, count)`` array."""
    res = np.empty((2, count), dtype=np.int64)
    for t in range(count):
        res[0, t] = perm[out[t]]
        res[1, t] = out[t]
    return res


@njit(**_JIT)
def _emit(points, index, js, lo, hi, order, n_check, qlo, qhi, out, count):
    """Verify the rows of window ``[lo, hi)`` on dimension ``js``; append matches.

    Returns the (possibly regrown) output buffer and the new count.
    """
    out = _reserve(out, count, hi - lo)
    if js == 0:
        for i in range(lo, hi):
            if _verify(points, i, order, n_check, qlo, qhi):
                out[count] = i
                count += 1
    else:
        imap = index[js - 1]
        for i in range(lo, hi):
            row = imap[i]
            if _verify(points, row, order, n_check, qlo, qhi):
                out[count] = row
                count += 1
    return out, count


@njit(**_JIT)
def _last_inside(spans, s, d, qlo, qhi):
    """Whether sub-database ``s`` lies inside the query on the last dimension."""
    return spans[0, s, d - 1] >= qlo[d - 1] and spans[1, s, d - 1] <= qhi[d - 1]


# ---------------------------------------------------------------- full search


@njit(**_JIT)
def search_full(points, index, geo, kvec, starts, perm, box, s_begin, s_end, params):
    """Full n-dimensional k-vector query over sub-databases ``[s_begin, s_end)``.

    ``geo`` is ``(n_db, d, 4)`` holding ``(m, q, column min, column max)`` per
    sub-database and dimension, ``box`` stacks the query's lower and upper
    bounds, and ``params`` is ``[ratio slope, ratio offset, trim threshold,
    forced trim mode]``.  Returns ``(result, examined, trim_steps, skipped,
    searched)`` where ``result`` stacks original ids over structured indexes.
    """
    d = points.shape[1]
    n_k = kvec.shape[2]
    qlo = box[0]
    qhi = box[1]
    r_slope = params[0]
    r_offset = params[1]
    threshold = params[2]
    force = int(params[3])
    scratch = np.empty((4, d), dtype=np.int64)
    A = scratch[0]
    B = scratch[1]
    p = scratch[2]
    order = scratch[3]
    out = np.empty(_INITIAL, dtype=np.int64)
    count = 0
    examined = 0
    trims = 0
    searched = 0
    # sub-databases are ordered on the last dimension: only a contiguous run
    # can intersect the query, the rest count as skipped without a probe
    r_lo, r_hi = subdb_run(geo[:, d - 1, 2], qlo[d - 1], qhi[d - 1])
    if r_lo < s_begin:
        r_lo = s_begin
    if r_hi > s_end:
        r_hi = s_end
    if r_hi < r_lo:
        r_hi = r_lo
    for s in range(r_lo, r_hi):
        start = starts[s]
        n_p = starts[s + 1] - start
        empty = False
        # last dimension first: it decides most skips
        for jj in range(d):
            j = d - 1 if jj == 0 else jj - 1
            g = geo[s, j]
            Aj, Bj, e = map_range(g[0], g[1], g[2] == g[3], g[2], n_k, qlo[j], qhi[j])
            if e:
                empty = True
                break
            pj = kvec[s, j, Bj] - kvec[s, j, Aj]
            if pj == 0:
                empty = True
                break
            A[j] = Aj
            B[j] = Bj
            p[j] = pj
        if empty:
            continue
        searched += 1
        r = projection_ratio(n_p, r_slope, r_offset)
        js = choose_dimension(p, r)
        lo, hi, st, _, _ = trim_window(
            points, index, js, kvec[s, js], A[js], B[js], qlo[js], qhi[js],
            n_p / n_k, threshold, force,
        )
        trims += st
        inside = geo[s, d - 1, 2] >= qlo[d - 1] and geo[s, d - 1, 3] <= qhi[d - 1]
        drop = d - 1 if (d - 1 != js and inside) else -1
        n_check = order_into(p, js, drop, order)
        examined += hi - lo
        out, count = _emit(points, index, js, lo, hi, order, n_check, qlo, qhi, out, count)
    return _result(perm, out, count), examined, trims, (s_end - s_begin) - searched, searched


# ---------------------------------------------------------------- reduced variants


@njit(**_JIT)
def subdb_run(submin, a, b):
    """Contiguous run ``[s_lo, s_hi)`` of sub-databases that may hold last-dim values in [a, b]."""
    n_db = submin.size
    # last sub-database whose minimum is <= b
    lo = 0
    hi = n_db
    while lo < hi:
        mid = (lo + hi) >> 1
        if submin[mid] <= b:
            lo = mid + 1
        else:
            hi = mid
    s_hi = lo
    # sub-database s can reach a only if the next minimum is >= a
    lo = 0
    hi = n_db
    while lo < hi:
        mid = (lo + hi) >> 1
        if submin[mid] < a:
            lo = mid + 1
        else:
            hi = mid
    s_lo = lo - 1
    if s_lo < 0:
        s_lo = 0
    if s_hi < s_lo:
        s_hi = s_lo
    return s_lo, s_hi


@njit(**_JIT)
def search_noindex(points, lines, kvec, spans, starts, perm, box, params):
    """Projection fixed to dimension 0; sub-databases chosen from their minima.

    ``lines`` and ``kvec`` hold dimension 0 only; ``params`` is
    ``[trim threshold, forced trim mode]``.
    """
    d = points.shape[1]
    n_k = kvec.shape[2]
    n_db = starts.size - 1
    qlo = box[0]
    qhi = box[1]
    threshold = params[0]
    force = int(params[1])
    dummy = np.empty((0, 0), dtype=np.int64)
    scratch = np.zeros((2, d), dtype=np.int64)
    flat = scratch[0]
    order = scratch[1]
    out = np.empty(_INITIAL, dtype=np.int64)
    s_lo, s_hi = subdb_run(spans[0, :, d - 1], qlo[d - 1], qhi[d - 1])
    count = 0
    examined = 0
    trims = 0
    searched = 0
    for s in range(s_lo, s_hi):
        start = starts[s]
        n_p = starts[s + 1] - start
        cmin = spans[0, s, 0]
        A, B, e = map_range(
            lines[s, 0, 0], lines[s, 0, 1], cmin == spans[1, s, 0], cmin, n_k, qlo[0], qhi[0]
        )
        if e or kvec[s, 0, B] == kvec[s, 0, A]:
            continue
        searched += 1
        lo, hi, st, _, _ = trim_window(
            points, dummy, 0, kvec[s, 0], A, B, qlo[0], qhi[0], n_p / n_k, threshold, force
        )
        trims += st
        drop = d - 1 if (d > 1 and _last_inside(spans, s, d, qlo, qhi)) else -1
        n_check = order_into(flat, 0, drop, order)
        examined += hi - lo
        out, count = _emit(points, dummy, 0, lo, hi, order, n_check, qlo, qhi, out, count)
    return _result(perm, out, count), examined, trims, n_db - searched, searched


@njit(**_JIT)
def search_nokv(points, index, spans, starts, perm, box, params):
    """Index arrays kept, k-vector replaced by two binary searches per dimension.

    ``params`` is ``[ratio slope, ratio offset]``.
    """
    d = points.shape[1]
    n_db = starts.size - 1
    qlo = box[0]
    qhi = box[1]
    scratch = np.empty((4, d), dtype=np.int64)
    L = scratch[0]
    H = scratch[1]
    p = scratch[2]
    order = scratch[3]
    out = np.empty(_INITIAL, dtype=np.int64)
    count = 0
    examined = 0
    steps = 0
    searched = 0
    for s in range(n_db):
        start = starts[s]
        end = starts[s + 1]
        empty = False
        for jj in range(d):
            j = d - 1 if jj == 0 else jj - 1
            lo, s1 = lower_bound(points, index, j, start, end, qlo[j])
            hi, s2 = upper_bound(points, index, j, lo, end, qhi[j])
            steps += s1 + s2
            if hi <= lo:
                empty = True
                break
            L[j] = lo
            H[j] = hi
            p[j] = hi - lo
        if empty:
            continue
        searched += 1
        r = projection_ratio(end - start, params[0], params[1])
        js = choose_dimension(p, r)
        drop = d - 1 if (d - 1 != js and _last_inside(spans, s, d, qlo, qhi)) else -1
        n_check = order_into(p, js, drop, order)
        examined += H[js] - L[js]
        out, count = _emit(points, index, js, L[js], H[js], order, n_check, qlo, qhi, out, count)
    return _result(perm, out, count), examined, steps, n_db - searched, searched


@njit(**_JIT)
def search_bare(points, spans, starts, perm, box):
    """Neither index nor k-vector arrays: minima run plus dimension-0 binary searches."""
    d = points.shape[1]
    n_db = starts.size - 1
    qlo = box[0]
    qhi = box[1]
    dummy = np.empty((0, 0), dtype=np.int64)
    scratch = np.zeros((2, d), dtype=np.int64)
    flat = scratch[0]
    order = scratch[1]
    out = np.empty(_INITIAL, dtype=np.int64)
    s_lo, s_hi = subdb_run(spans[0, :, d - 1], qlo[d - 1], qhi[d - 1])
    count = 0
    examined = 0
    steps = 0
    searched = 0
    for s in range(s_lo, s_hi):
        lo, s1 = lower_bound(points, dummy, 0, starts[s], starts[s + 1], qlo[0])
        hi, s2 = upper_bound(points, dummy, 0, lo, starts[s + 1], qhi[0])
        steps += s1 + s2
        if hi <= lo:
            continue
        searched += 1
        drop = d - 1 if (d > 1 and _last_inside(spans, s, d, qlo, qhi)) else -1
        n_check = order_into(flat, 0, drop, order)
        examined += hi - lo
        out, count = _emit(points, dummy, 0, lo, hi, order, n_check, qlo, qhi, out, count)
    return _result(perm, out, count), examined, steps, n_db - searched, searched


# ---------------------------------------------------------------- baselines


@njit(**_JIT)
def brute_force(points, box):
    n, d = points.shape
    qlo = box[0]
    qhi = box[1]
    out = np.empty(n, dtype=np.int64)
    count = 0
    for i in range(n):
        ok = True
        for j in range(d):
            v = points[i, j]
            if v < qlo[j] or v > qhi[j]:
                ok = False
                break
        if ok:
            out[count] = i
            count += 1
    return out[:count]


@njit(**_JIT)
def _key_less(points, dim, i, j):
    vi = points[i, dim]
    vj = points[j, dim]
    if vi < vj:
        return True
    if vi > vj:
        return False
    return i < j


@njit(**_JIT)
def _select(points, idx, lo, hi, k, dim):
    """Reorder ``idx[lo:hi]`` so position ``k`` holds the (value, id) order statistic."""
    while hi - lo > 1:
        mid = (lo + hi - 1) >> 1
        a = idx[lo]
        b = idx[mid]
        c = idx[hi - 1]
        # median of three as pivot
        if _key_less(points, dim, a, b):
            if _key_less(points, dim, b, c):
                piv = b
            elif _key_less(points, dim, a, c):
                piv = c
            else:
                piv = a
        else:
            if _key_less(points, dim, a, c):
                piv = a
            elif _key_less(points, dim, b, c):
                piv = c
            else:
                piv = b
        # three-way partition around the unique key piv
        i = lo
        lt = lo
        gt = hi
        while i < gt:
            x = idx[i]
            if x != piv and _key_less(points, dim, x, piv):
                idx[i] = idx[lt]
                idx[lt] = x
                lt += 1
                i += 1
            elif x == piv:
                i += 1
            else:
                gt -= 1
                idx[i] = idx[gt]
                idx[gt] = x
        if k < lt:
            hi = lt
        elif k >= gt:
            lo = gt
        else:
            return


@njit(**_JIT)
def kdtree_build(points, leaf_size):
    """Median-split k-d tree cycling the split dimension by depth.

    Returns ``(idx, node_lo, node_hi, split_dim, split_val, left, right, bbox)``
    where leaves have ``left == -1``.
    """
    n, d = points.shape
    idx = np.arange(n).astype(np.int64)
    min_leaf = max((leaf_size + 1) // 2, 1)
    cap = 2 * (n // min_leaf + 1) + 1
    node_lo = np.empty(cap, dtype=np.int64)
    node_hi = np.empty(cap, dtype=np.int64)
    split_dim = np.full(cap, -1, dtype=np.int64)
    split_val = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    depth = np.zeros(cap, dtype=np.int64)
    bbox = np.empty((cap, d, 2), dtype=np.float64)
    n_nodes = 1
    node_lo[0] = 0
    node_hi[0] = n
    stack = np.empty(cap, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        nd = stack[top]
        lo = node_lo[nd]
        hi = node_hi[nd]
        for j in range(d):
            mn = points[idx[lo], j]
            mx = mn
            for t in range(lo + 1, hi):
                v = points[idx[t], j]
                if v < mn:
                    mn = v
                elif v > mx:
                    mx = v
            bbox[nd, j, 0] = mn
            bbox[nd, j, 1] = mx
        if hi - lo <= leaf_size:
            continue
        dim = depth[nd] % d
        mid = lo + (hi - lo) // 2
        _select(points, idx, lo, hi, mid, dim)
        split_dim[nd] = dim
        split_val[nd] = points[idx[mid], dim]
        l_node = n_nodes
        r_node = n_nodes + 1
        n_nodes += 2
        node_lo[l_node] = lo
        node_hi[l_node] = mid
        node_lo[r_node] = mid
        node_hi[r_node] = hi
        depth[l_node] = depth[nd] + 1
        depth[r_node] = depth[nd] + 1
        left[nd] = l_node
        right[nd] = r_node
        stack[top] = r_node
        top += 1
        stack[top] = l_node
        top += 1
    return (
        idx, node_lo[:n_nodes].copy(), node_hi[:n_nodes].copy(), split_dim[:n_nodes].copy(),
        split_val[:n_nodes].copy(), left[:n_nodes].copy(), right[:n_nodes].copy(),
        bbox[:n_nodes].copy(),
    )


@njit(**_JIT)
def kdtree_query(points, idx, node_lo, node_hi, left, right, bbox, box):
    """Matching original ids plus ``examined`` and ``visited`` node counts."""
    d = points.shape[1]
    qlo = box[0]
    qhi = box[1]
    out = np.empty(_INITIAL, dtype=np.int64)
    stack = np.empty(128, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    count = 0
    examined = 0
    visited = 0
    while top > 0:
        top -= 1
        nd = stack[top]
        visited += 1
        disjoint = False
        inside = True
        for j in range(d):
            if bbox[nd, j, 0] > qhi[j] or bbox[nd, j, 1] < qlo[j]:
                disjoint = True
                break
            if bbox[nd, j, 0] < qlo[j] or bbox[nd, j, 1] > qhi[j]:
                inside = False
        if disjoint:
            continue
        if inside:
            out = _reserve(out, count, node_hi[nd] - node_lo[nd])
            for t in range(node_lo[nd], node_hi[nd]):
                out[count] = idx[t]
                count += 1
            continue
        if left[nd] < 0:
            out = _reserve(out, count, node_hi[nd] - node_lo[nd])
            for t in range(node_lo[nd], node_hi[nd]):
                row = idx[t]
                examined += 1
                ok = True
                for j in range(d):
                    v = points[row, j]
                    if v < qlo[j] or v > qhi[j]:
                        ok = False
                        break
                if ok:
                    out[count] = row
                    count += 1
            continue
        stack[top] = right[nd]
        top += 1
        stack[top] = left[nd]
        top += 1
    return out[:count], examined, visited
