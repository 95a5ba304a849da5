# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled hot loops: min-cost-flow transportation and Gini tree growth.

Every routine here has a line-for-line twin in ``_pykernels``; both must
produce bit-identical output for identical input.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY
from libcpp.algorithm cimport sort
from libcpp.pair cimport pair
from libcpp.vector cimport vector

cnp.import_array()


def transport_ssp(const double[:, ::1] cost, const long long[::1] cap):
    """Min-cost assignment of every column (task) to a row (worker).

    ``cost`` must be nonnegative. Returns an int64 array with the row index
    chosen for each column, or ``None`` when capacities cannot cover all
    columns.
    """
    cdef Py_ssize_t W = cost.shape[0], T = cost.shape[1]
    cdef Py_ssize_t V = W + T + 2, src = 0, sink = W + T + 1
    cdef Py_ssize_t it, step, u, v, w, j, a, best
    cdef double du, nd, bestd

    assign_arr = np.full(T, -1, dtype=np.int64)
    cdef long long[::1] assign = assign_arr
    cdef long long[::1] used = np.zeros(W, dtype=np.int64)
    cdef double[::1] pi = np.zeros(V, dtype=np.float64)
    cdef double[::1] dist = np.empty(V, dtype=np.float64)
    cdef long long[::1] pred = np.empty(V, dtype=np.int64)
    cdef unsigned char[::1] done = np.empty(V, dtype=np.uint8)

    for it in range(T):
        for u in range(V):
            dist[u] = INFINITY
            pred[u] = -1
            done[u] = 0
        dist[src] = 0.0

        for step in range(V):
            best = -1
            bestd = INFINITY
            for u in range(V):
                if not done[u] and dist[u] < bestd:
                    bestd = dist[u]
                    best = u
            if best < 0:
                break
            u = best
            done[u] = 1
            du = dist[u]
            if u == src:
                for w in range(W):
                    if used[w] < cap[w]:
                        v = 1 + w
                        nd = du + 0.0 + pi[u] - pi[v]
                        if not done[v] and nd < dist[v]:
                            dist[v] = nd
                            pred[v] = u
            elif u <= W:
                w = u - 1
                for j in range(T):
                    if assign[j] != w:
                        v = 1 + W + j
                        nd = du + cost[w, j] + pi[u] - pi[v]
                        if not done[v] and nd < dist[v]:
                            dist[v] = nd
                            pred[v] = u
            elif u < sink:
                j = u - 1 - W
                a = assign[j]
                if a < 0:
                    v = sink
                    nd = du + 0.0 + pi[u] - pi[v]
                else:
                    v = 1 + a
                    nd = du - cost[a, j] + pi[u] - pi[v]
                if not done[v] and nd < dist[v]:
                    dist[v] = nd
                    pred[v] = u
            else:
                for j in range(T):
                    if assign[j] >= 0:
                        v = 1 + W + j
                        nd = du + 0.0 + pi[u] - pi[v]
                        if not done[v] and nd < dist[v]:
                            dist[v] = nd
                            pred[v] = u

        if dist[sink] == INFINITY:
            return None

        v = pred[sink]
        while v != src:
            u = pred[v]
            if v > W:
                assign[v - 1 - W] = u - 1
            elif u == src:
                used[v - 1] += 1
            v = u

        for u in range(V):
            if dist[u] < INFINITY:
                pi[u] += dist[u]

    return assign_arr


ctypedef pair[double, int] vlab


def build_tree(const double[:, ::1] X, const signed char[::1] y,
               const long long[::1] sample, const long long[:, ::1] feat_order,
               Py_ssize_t mtry, Py_ssize_t min_leaf):
    """Grow one Gini tree on the rows listed in ``sample``.

    Nodes are numbered in creation order; node ``k`` considers the features
    ``feat_order[k, :mtry]``. Returns ``(feature, threshold, left, right,
    n_node, n_pos)`` trimmed to the node count; leaves have feature -1.
    """
    cdef Py_ssize_t n_s = sample.shape[0]
    cdef Py_ssize_t max_nodes = feat_order.shape[0]
    cdef Py_ssize_t n_nodes = 1, top = 0
    cdef Py_ssize_t node, start, end, n, pos, k, f, i, sl, nl, nr, sr
    cdef Py_ssize_t best_f, best_i, lo, hi
    cdef double imp, best_imp, thr, best_thr, xv

    feature_a = np.full(max_nodes, -1, dtype=np.int64)
    threshold_a = np.zeros(max_nodes, dtype=np.float64)
    left_a = np.full(max_nodes, -1, dtype=np.int64)
    right_a = np.full(max_nodes, -1, dtype=np.int64)
    nnode_a = np.zeros(max_nodes, dtype=np.int64)
    npos_a = np.zeros(max_nodes, dtype=np.int64)
    cdef long long[::1] feature = feature_a
    cdef double[::1] threshold = threshold_a
    cdef long long[::1] left = left_a
    cdef long long[::1] right = right_a
    cdef long long[::1] n_node = nnode_a
    cdef long long[::1] n_pos = npos_a

    cdef long long[::1] idx = np.array(sample, dtype=np.int64, copy=True)
    cdef long long[::1] buf = np.empty(max(n_s, 1), dtype=np.int64)
    cdef long long[::1] st_node = np.empty(max_nodes, dtype=np.int64)
    cdef long long[::1] st_start = np.empty(max_nodes, dtype=np.int64)
    cdef long long[::1] st_end = np.empty(max_nodes, dtype=np.int64)
    cdef vector[vlab] pairs
    pairs.resize(max(n_s, 1))

    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n_s
    top = 1
    while top > 0:
        top -= 1
        node = st_node[top]
        start = st_start[top]
        end = st_end[top]
        n = end - start
        pos = 0
        for i in range(start, end):
            pos += y[idx[i]]
        n_node[node] = n
        n_pos[node] = pos
        if n < 2 * min_leaf or pos == 0 or pos == n:
            continue

        best_f = -1
        best_i = -1
        best_imp = INFINITY
        best_thr = 0.0
        for k in range(mtry):
            f = feat_order[node, k]
            for i in range(n):
                pairs[i].first = X[idx[start + i], f]
                pairs[i].second = y[idx[start + i]]
            sort(pairs.begin(), pairs.begin() + n)
            sl = 0
            for i in range(1, n - min_leaf + 1):
                sl += pairs[i - 1].second
                if i < min_leaf:
                    continue
                if not (pairs[i - 1].first < pairs[i].first):
                    continue
                nl = i
                nr = n - i
                sr = pos - sl
                imp = (<double>sl) * (<double>(nl - sl)) / (<double>nl) + (<double>sr) * (<double>(nr - sr)) / (<double>nr)
                if imp < best_imp:
                    best_imp = imp
                    best_f = f
                    best_i = i
                    thr = pairs[i - 1].first + (pairs[i].first - pairs[i - 1].first) / 2.0
                    if thr >= pairs[i].first:
                        thr = pairs[i - 1].first
                    best_thr = thr
        if best_f < 0:
            continue

        # stable partition of idx[start:end] on X[:, best_f] <= best_thr
        lo = 0
        hi = 0
        for i in range(start, end):
            xv = X[idx[i], best_f]
            if xv <= best_thr:
                idx[start + lo] = idx[i]
                lo += 1
            else:
                buf[hi] = idx[i]
                hi += 1
        for i in range(hi):
            idx[start + lo + i] = buf[i]

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        n_nodes += 2
        st_node[top] = right[node]
        st_start[top] = start + lo
        st_end[top] = end
        top += 1
        st_node[top] = left[node]
        st_start[top] = start
        st_end[top] = start + lo
        top += 1

    return (feature_a[:n_nodes].copy(), threshold_a[:n_nodes].copy(),
            left_a[:n_nodes].copy(), right_a[:n_nodes].copy(),
            nnode_a[:n_nodes].copy(), npos_a[:n_nodes].copy())


def tree_apply(const long long[::1] feature, const double[::1] threshold,
               const long long[::1] left, const long long[::1] right,
               const double[:, ::1] X):
    """Leaf index reached by each row of ``X``."""
    cdef Py_ssize_t n = X.shape[0], r, node
    out_a = np.empty(n, dtype=np.int64)
    cdef long long[::1] out = out_a
    for r in range(n):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out_a
