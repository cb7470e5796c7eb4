"""Compiled kernels for CART growth and traversal.

Flat-array tree encoding, sized for at most 2k-1 nodes when grown on k rows:

    node_feature  int64   split column, -1 for leaves
    node_kind     int64   0 numeric threshold, 1 level-subset mask, 2 single level
    node_num      float64 threshold (kind 0) or level (kind 2)
    node_mask     int64   bitmask of levels routed left (kind 1 only)
    node_left/right int64 child ids
    node_value    float64 mean response of training rows reaching the node
    node_count    int64   training rows reaching the node

All randomness is injected through ``feat_order`` (one pre-drawn feature
permutation per prospective node), so growth is deterministic given inputs
and safe to run on any thread.
"""

import numpy as np
from numba import njit

KIND_NUMERIC = 0
KIND_SUBSET = 1
KIND_LEVEL = 2

# exhaustive level-subset search is capped here; larger factors fall back to
# one-vs-rest splits
EXHAUSTIVE_LEVEL_CAP = 10


@njit(cache=True, nogil=True)
def _subset_lex_less(a, b):
    # Bitmasks compared as ascending level tuples, shorter prefix first.
    while True:
        if a == b:
            return False
        if a == 0:
            return True
        if b == 0:
            return False
        la = a & (-a)
        lb = b & (-b)
        if la != lb:
            return la < lb
        a ^= la
        b ^= lb


@njit(cache=True, nogil=True)
def _best_numeric_split(X, y, idx, lo, m, j, mu, min_child):
    # Midpoints between consecutive distinct sorted values; SSE via prefix
    # sums of the node-centered response.
    xv = np.empty(m)
    yv = np.empty(m)
    for t in range(m):
        r = idx[lo + t]
        xv[t] = X[r, j]
        yv[t] = y[r] - mu
    order = np.argsort(xv, kind="mergesort")
    tot = 0.0
    tot2 = 0.0
    for t in range(m):
        tot += yv[t]
        tot2 += yv[t] * yv[t]
    best_sse = np.inf
    best_thr = 0.0
    cs = 0.0
    cq = 0.0
    for i in range(1, m):
        w = yv[order[i - 1]]
        cs += w
        cq += w * w
        xa = xv[order[i - 1]]
        xb = xv[order[i]]
        if xa < xb:
            nl = i
            nr = m - i
            if nl >= min_child and nr >= min_child:
                ds = tot - cs
                sse = (cq - cs * cs / nl) + ((tot2 - cq) - ds * ds / nr)
                if sse < best_sse:
                    best_sse = sse
                    best_thr = 0.5 * (xa + xb)
    return best_sse, best_thr


@njit(cache=True, nogil=True)
def _best_categorical_split(X, y, idx, lo, m, j, mu, min_child, n_levels):
    # Per-level sufficient statistics, then either an exhaustive scan over
    # subsets of the levels present in the node or one-vs-rest when the
    # factor is too wide.  Ties resolve to the lexicographically smallest
    # left-level subset.
    cnt = np.zeros(n_levels, np.int64)
    s1 = np.zeros(n_levels)
    s2 = np.zeros(n_levels)
    for t in range(m):
        r = idx[lo + t]
        lev = np.int64(X[r, j])
        w = y[r] - mu
        cnt[lev] += 1
        s1[lev] += w
        s2[lev] += w * w
    present = np.empty(n_levels, np.int64)
    q = 0
    tot = 0.0
    tot2 = 0.0
    for lev in range(n_levels):
        if cnt[lev] > 0:
            present[q] = lev
            q += 1
            tot += s1[lev]
            tot2 += s2[lev]
    best_sse = np.inf
    best_kind = KIND_SUBSET
    best_mask = np.int64(0)
    best_lev = -1.0
    if q < 2:
        return best_sse, best_kind, best_mask, best_lev
    if n_levels <= EXHAUSTIVE_LEVEL_CAP:
        top = (np.int64(1) << q) - 1
        for sub in range(1, top):
            nl = 0
            sl = 0.0
            ql = 0.0
            for b in range(q):
                if (sub >> b) & 1:
                    lev = present[b]
                    nl += cnt[lev]
                    sl += s1[lev]
                    ql += s2[lev]
            nr = m - nl
            if nl < min_child or nr < min_child:
                continue
            ds = tot - sl
            sse = (ql - sl * sl / nl) + ((tot2 - ql) - ds * ds / nr)
            if sse <= best_sse:
                gmask = np.int64(0)
                for b in range(q):
                    if (sub >> b) & 1:
                        gmask |= np.int64(1) << present[b]
                if sse < best_sse or _subset_lex_less(gmask, best_mask):
                    best_sse = sse
                    best_mask = gmask
    else:
        best_kind = KIND_LEVEL
        for b in range(q):
            lev = present[b]
            nl = cnt[lev]
            nr = m - nl
            if nl < min_child or nr < min_child:
                continue
            ds = tot - s1[lev]
            sse = (s2[lev] - s1[lev] * s1[lev] / nl) + ((tot2 - s2[lev]) - ds * ds / nr)
            if sse < best_sse:
                best_sse = sse
                best_lev = float(lev)
    return best_sse, best_kind, best_mask, best_lev


@njit(cache=True, nogil=True)
def _goes_left(v, kind, num, mask):
    if kind == KIND_NUMERIC:
        return v <= num
    lev = np.int64(v)
    if kind == KIND_SUBSET:
        if lev < 0 or lev > 62:
            return False
        return ((mask >> lev) & 1) == 1
    return lev == np.int64(num)


@njit(cache=True, nogil=True)
def grow_tree(
    X,
    y,
    rows,
    level_counts,
    feat_order,
    mtry,
    min_leaf,
    max_depth,
    min_child_extra,
    node_feature,
    node_kind,
    node_num,
    node_mask,
    node_left,
    node_right,
    node_value,
    node_count,
):
    """Grow a CART regression tree on ``rows``; returns the node count.

    Greedy SSE-minimizing splits over ``mtry`` features drawn per node from
    ``feat_order``.  When none of the first ``mtry`` candidates admits a
    valid split, further features from the same permutation are tried until
    one does or all are exhausted, so growth stops only on node size, depth,
    purity, or the child-size floor.  Among equal-SSE splits the lowest
    feature index wins, then the smallest threshold or lexicographically
    smallest level subset.
    """
    k = rows.shape[0]
    p = X.shape[1]
    idx = rows.copy()
    buf = np.empty(k, np.int64)
    cap = node_feature.shape[0]
    stack_node = np.empty(cap, np.int64)
    stack_lo = np.empty(cap, np.int64)
    stack_hi = np.empty(cap, np.int64)
    stack_depth = np.empty(cap, np.int64)
    min_child = min_leaf if min_leaf > min_child_extra else min_child_extra
    n_nodes = 1
    sp = 0
    stack_node[sp] = 0
    stack_lo[sp] = 0
    stack_hi[sp] = k
    stack_depth[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        lo = stack_lo[sp]
        hi = stack_hi[sp]
        depth = stack_depth[sp]
        m = hi - lo

        s = 0.0
        ymin = y[idx[lo]]
        ymax = ymin
        for t in range(lo, hi):
            v = y[idx[t]]
            s += v
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        mu = s / m
        node_value[node] = mu
        node_count[node] = m
        node_feature[node] = -1

        splittable = (
            m >= 2 * min_child
            and ymin < ymax
            and (max_depth < 0 or depth < max_depth)
        )
        best_feat = -1
        best_sse = np.inf
        best_kind = KIND_NUMERIC
        best_num = 0.0
        best_mask = np.int64(0)
        if splittable:
            order = feat_order[node]
            for oi in range(p):
                if oi >= mtry and best_feat >= 0:
                    break
                j = order[oi]
                if level_counts[j] == 0:
                    sse, thr = _best_numeric_split(X, y, idx, lo, m, j, mu, min_child)
                    if sse < best_sse or (sse == best_sse and j < best_feat):
                        best_sse = sse
                        best_feat = j
                        best_kind = KIND_NUMERIC
                        best_num = thr
                        best_mask = np.int64(0)
                else:
                    sse, ckind, cmask, clev = _best_categorical_split(
                        X, y, idx, lo, m, j, mu, min_child, level_counts[j]
                    )
                    if sse < best_sse or (sse == best_sse and j < best_feat):
                        best_sse = sse
                        best_feat = j
                        best_kind = ckind
                        best_num = clev
                        best_mask = cmask

        if best_feat < 0:
            # leaf: freeze the payload as the ascending-row-order mean so a
            # replay over the member rows reproduces it exactly
            seg = np.sort(idx[lo:hi])
            for t in range(m):
                idx[lo + t] = seg[t]
            s = 0.0
            for t in range(lo, hi):
                s += y[idx[t]]
            node_value[node] = s / m
            continue

        c = lo
        for t in range(lo, hi):
            r = idx[t]
            if _goes_left(X[r, best_feat], best_kind, best_num, best_mask):
                buf[c] = r
                c += 1
        nl = c - lo
        for t in range(lo, hi):
            r = idx[t]
            if not _goes_left(X[r, best_feat], best_kind, best_num, best_mask):
                buf[c] = r
                c += 1
        for t in range(lo, hi):
            idx[t] = buf[t]

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        node_feature[node] = best_feat
        node_kind[node] = best_kind
        node_num[node] = best_num
        node_mask[node] = best_mask
        node_left[node] = lid
        node_right[node] = rid
        stack_node[sp] = rid
        stack_lo[sp] = lo + nl
        stack_hi[sp] = hi
        stack_depth[sp] = depth + 1
        sp += 1
        stack_node[sp] = lid
        stack_lo[sp] = lo
        stack_hi[sp] = lo + nl
        stack_depth[sp] = depth + 1
        sp += 1
    return n_nodes


@njit(cache=True, nogil=True)
def predict_points(
    Xq, node_feature, node_kind, node_num, node_mask, node_left, node_right, node_value, out
):
    for i in range(Xq.shape[0]):
        node = 0
        while node_feature[node] >= 0:
            v = Xq[i, node_feature[node]]
            if _goes_left(v, node_kind[node], node_num[node], node_mask[node]):
                node = node_left[node]
            else:
                node = node_right[node]
        out[i] = node_value[node]


@njit(cache=True, nogil=True)
def apply_points(
    Xq, node_feature, node_kind, node_num, node_mask, node_left, node_right, out
):
    for i in range(Xq.shape[0]):
        node = 0
        while node_feature[node] >= 0:
            v = Xq[i, node_feature[node]]
            if _goes_left(v, node_kind[node], node_num[node], node_mask[node]):
                node = node_left[node]
            else:
                node = node_right[node]
        out[i] = node
