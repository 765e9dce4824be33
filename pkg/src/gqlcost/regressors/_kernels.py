"""Hot loops: CART construction, tree traversal, nearest neighbours.

Each kernel has a numba loop version (``*_nb``) and a numpy version
(``*_np``) implementing the same algorithm with the same tie-breaking; the
public wrappers dispatch on :func:`gqlcost._accel.backend`.

Trees are flat arrays: ``feature[i] < 0`` marks a leaf, otherwise rows with
``x[feature] <= threshold`` go to ``left[i]`` and the rest to ``right[i]``.
"""
from __future__ import annotations

import numpy as np

from .._accel import backend, njit

# a node whose centred sum of squares is below this (relative) level is constant
_CONST_RTOL = 1e-20


@njit
def _build_tree_nb(Xt, y, order, max_depth, min_leaf):
    # Xt is the transposed (d, n) matrix so per-feature scans stay local
    d, n = Xt.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)

    work = order.copy()
    buf = np.empty(n, dtype=np.int64)
    goes_left = np.zeros(n, dtype=np.bool_)
    yc = np.empty(n, dtype=np.float64)

    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    sp = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    sp = 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        node = st_node[sp]
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        m = end - start

        total = 0.0
        for p in range(start, end):
            total += y[work[0, p]]
        mean = total / m
        value[node] = mean
        if (max_depth >= 0 and depth >= max_depth) or m < 2 * min_leaf:
            continue
        sse = 0.0
        for p in range(start, end):
            r = work[0, p]
            yc[r] = y[r] - mean
            sse += yc[r] * yc[r]
        if sse <= _CONST_RTOL * (1.0 + m * mean * mean):
            continue

        best_red = 0.0
        best_j = -1
        best_pos = -1
        for j in range(d):
            sl = 0.0
            for p in range(start, end - 1):
                r = work[j, p]
                sl += yc[r]
                nl = p - start + 1
                nr = m - nl
                if nr < min_leaf:
                    break
                if nl < min_leaf:
                    continue
                if Xt[j, work[j, p + 1]] <= Xt[j, r]:
                    continue
                red = sl * sl * m / (nl * nr)
                if red > best_red:
                    best_red = red
                    best_j = j
                    best_pos = p
        if best_j < 0:
            continue

        x0 = Xt[best_j, work[best_j, best_pos]]
        x1 = Xt[best_j, work[best_j, best_pos + 1]]
        thr = 0.5 * (x0 + x1)
        if thr >= x1:
            thr = x0
        n_left = best_pos - start + 1
        for p in range(start, best_pos + 1):
            goes_left[work[best_j, p]] = True
        # children that must be leaves only need their row-0 segment
        n_part = 1 if (max_depth >= 0 and depth + 1 >= max_depth) else d
        for j in range(n_part):
            a = 0
            b = n_left
            for p in range(start, end):
                r = work[j, p]
                if goes_left[r]:
                    buf[a] = r
                    a += 1
                else:
                    buf[b] = r
                    b += 1
            for q in range(m):
                work[j, start + q] = buf[q]
        for p in range(start, start + n_left):
            goes_left[work[0, p]] = False

        feature[node] = best_j
        threshold[node] = thr
        li = n_nodes
        ri = n_nodes + 1
        n_nodes += 2
        left[node] = li
        right[node] = ri
        # right pushed first so the left subtree is expanded first
        st_node[sp] = ri
        st_start[sp] = start + n_left
        st_end[sp] = end
        st_depth[sp] = depth + 1
        sp += 1
        st_node[sp] = li
        st_start[sp] = start
        st_end[sp] = start + n_left
        st_depth[sp] = depth + 1
        sp += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


def _build_tree_np(X, y, order, max_depth, min_leaf):
    n, d = X.shape
    feature, threshold, left, right, value = [], [], [], [], []
    work = order.copy()
    cols = np.arange(d)[:, None]
    goes_left = np.zeros(n, dtype=bool)

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    new_node()
    stack = [(0, 0, n, 0)]
    while stack:
        node, start, end, depth = stack.pop()
        m = end - start
        seg = work[:, start:end]
        ys = y[seg]
        mean = np.cumsum(ys[0])[-1] / m
        value[node] = mean
        if (max_depth >= 0 and depth >= max_depth) or m < 2 * min_leaf:
            continue
        yc = ys - mean
        sse = np.cumsum(yc[0] * yc[0])[-1]
        if sse <= _CONST_RTOL * (1.0 + m * mean * mean):
            continue
        sl = np.cumsum(yc, axis=1)[:, :-1]
        nl = np.arange(1, m)
        nr = m - nl
        xs = X[seg, cols]
        ok = (xs[:, 1:] > xs[:, :-1]) & (nl >= min_leaf) & (nr >= min_leaf)
        red = np.where(ok, sl * sl * m / (nl * nr), 0.0)
        flat = int(np.argmax(red))
        if not red.flat[flat] > 0.0:
            continue
        j, pos = divmod(flat, m - 1)
        x0, x1 = xs[j, pos], xs[j, pos + 1]
        thr = 0.5 * (x0 + x1)
        if thr >= x1:
            thr = x0
        n_left = pos + 1
        goes_left[seg[j, :n_left]] = True
        n_part = 1 if (max_depth >= 0 and depth + 1 >= max_depth) else d
        part = seg[:n_part]
        mask = goes_left[part]
        work[:n_part, start:end] = np.concatenate(
            [part[mask].reshape(n_part, n_left), part[~mask].reshape(n_part, m - n_left)],
            axis=1)
        goes_left[seg[j, :n_left]] = False

        feature[node] = j
        threshold[node] = thr
        li = new_node()
        ri = new_node()
        left[node] = li
        right[node] = ri
        stack.append((ri, start + n_left, end, depth + 1))
        stack.append((li, start, start + n_left, depth + 1))

    return (np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
            np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
            np.array(value, dtype=np.float64))


def presort(X: np.ndarray) -> np.ndarray:
    """Row indices sorted by each column, shape ``(d, n)``."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))


def build_tree(X, y, order=None, max_depth=-1, min_leaf=1):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if order is None:
        order = presort(X)
    if backend() == "numba":
        return _build_tree_nb(np.ascontiguousarray(X.T), y, order, int(max_depth),
                              int(min_leaf))
    return _build_tree_np(X, y, order, int(max_depth), int(min_leaf))


@njit
def _apply_tree_nb(X, feature, threshold, left, right, value):
    n = X.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


def _apply_tree_np(X, feature, threshold, left, right, value):
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    while True:
        f = feature[node]
        inner = f >= 0
        if not inner.any():
            break
        fi = np.where(inner, f, 0)
        go_left = X[rows, fi] <= threshold[node]
        node = np.where(inner, np.where(go_left, left[node], right[node]), node)
    return value[node]


def apply_tree(X, tree):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if backend() == "numba":
        return _apply_tree_nb(X, *tree)
    return _apply_tree_np(X, *tree)


@njit
def _knn_nb(train, targets, query, k):
    n, d = train.shape
    q = query.shape[0]
    out = np.empty(q, dtype=np.float64)
    best_d = np.empty(k, dtype=np.float64)
    best_i = np.empty(k, dtype=np.int64)
    kk = min(k, n)
    for i in range(q):
        for s in range(kk):
            best_d[s] = np.inf
            best_i[s] = n
        for t in range(n):
            dist = 0.0
            for c in range(d):
                diff = query[i, c] - train[t, c]
                dist += diff * diff
            # strict comparison keeps the lower row index on ties
            if dist < best_d[kk - 1]:
                s = kk - 1
                while s > 0 and dist < best_d[s - 1]:
                    best_d[s] = best_d[s - 1]
                    best_i[s] = best_i[s - 1]
                    s -= 1
                best_d[s] = dist
                best_i[s] = t
        acc = 0.0
        for s in range(kk):
            acc += targets[best_i[s]]
        out[i] = acc / kk
    return out


def _knn_np(train, targets, query, k):
    n, d = train.shape
    kk = min(k, n)
    out = np.empty(query.shape[0], dtype=np.float64)
    chunk = max(1, int(4_000_000 // max(1, n * d)))
    for a in range(0, query.shape[0], chunk):
        diff = query[a:a + chunk, None, :] - train[None, :, :]
        dist = np.einsum("qnd,qnd->qn", diff, diff)
        idx = np.argsort(dist, axis=1, kind="stable")[:, :kk]
        out[a:a + chunk] = targets[idx].sum(axis=1) / kk
    return out


def knn_predict(train, targets, query, k):
    train = np.ascontiguousarray(train, dtype=np.float64)
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    query = np.ascontiguousarray(query, dtype=np.float64)
    if backend() == "numba":
        return _knn_nb(train, targets, query, int(k))
    return _knn_np(train, targets, query, int(k))
