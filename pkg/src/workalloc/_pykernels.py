"""Pure-Python twins of the compiled kernels in ``_ckernels.pyx``.

Arithmetic is ordered exactly as in the compiled version so both backends
return bit-identical results.
"""
import numpy as np


def transport_ssp(cost, cap):
    """Min-cost assignment of columns to capacitated rows; ``cost`` must be nonnegative.

    Returns the row per column, or None when capacity falls short.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    cap = np.ascontiguousarray(cap, dtype=np.int64)
    W, T = cost.shape
    V = W + T + 2
    src, sink = 0, W + T + 1
    task_nodes = np.arange(1 + W, 1 + W + T)
    worker_nodes = np.arange(1, 1 + W)

    assign = np.full(T, -1, dtype=np.int64)
    used = np.zeros(W, dtype=np.int64)
    pi = np.zeros(V)

    for _ in range(T):
        dist = np.full(V, np.inf)
        pred = np.full(V, -1, dtype=np.int64)
        done = np.zeros(V, dtype=bool)
        dist[src] = 0.0
        for _step in range(V):
            masked = np.where(done, np.inf, dist)
            u = int(np.argmin(masked))
            if not masked[u] < np.inf:
                break
            done[u] = True
            du = dist[u]
            if u == src:
                vs = worker_nodes
                nd = du + 0.0 + pi[u] - pi[vs]
                ok = used < cap
            elif u <= W:
                w = u - 1
                vs = task_nodes
                nd = du + cost[w] + pi[u] - pi[vs]
                ok = assign != w
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
                continue
            else:
                vs = task_nodes
                nd = du + 0.0 + pi[u] - pi[vs]
                ok = assign >= 0
            ok = ok & ~done[vs] & (nd < dist[vs])
            dist[vs[ok]] = nd[ok]
            pred[vs[ok]] = u

        if dist[sink] == np.inf:
            return None

        v = pred[sink]
        while v != src:
            u = pred[v]
            if v > W:
                assign[v - 1 - W] = u - 1
            elif u == src:
                used[v - 1] += 1
            v = u

        finite = dist < np.inf
        pi[finite] += dist[finite]

    return assign


def build_tree(X, y, sample, feat_order, mtry, min_leaf):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    max_nodes = feat_order.shape[0]
    feature = np.full(max_nodes, -1, dtype=np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    n_node = np.zeros(max_nodes, dtype=np.int64)
    n_pos = np.zeros(max_nodes, dtype=np.int64)

    n_nodes = 1
    stack = [(0, np.array(sample, dtype=np.int64))]
    while stack:
        node, idx = stack.pop()
        n = idx.size
        labels = y[idx]
        pos = int(labels.sum())
        n_node[node] = n
        n_pos[node] = pos
        if n < 2 * min_leaf or pos == 0 or pos == n:
            continue

        best_f, best_imp, best_thr = -1, np.inf, 0.0
        nl = np.arange(min_leaf, n - min_leaf + 1)
        for k in range(mtry):
            f = int(feat_order[node, k])
            vals = X[idx, f]
            order = np.lexsort((labels, vals))
            sv = vals[order]
            sl = np.cumsum(labels[order])[nl - 1]
            valid = sv[nl - 1] < sv[nl]
            if not valid.any():
                continue
            nr = n - nl
            sr = pos - sl
            imp = (sl.astype(np.float64) * (nl - sl).astype(np.float64) / nl.astype(np.float64)
                   + sr.astype(np.float64) * (nr - sr).astype(np.float64) / nr.astype(np.float64))
            imp = np.where(valid, imp, np.inf)
            b = int(np.argmin(imp))
            if imp[b] < best_imp:
                i = nl[b]
                best_imp = imp[b]
                best_f = f
                thr = sv[i - 1] + (sv[i] - sv[i - 1]) / 2.0
                if thr >= sv[i]:
                    thr = sv[i - 1]
                best_thr = thr
        if best_f < 0:
            continue

        go_left = X[idx, best_f] <= best_thr
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        n_nodes += 2
        stack.append((right[node], idx[~go_left]))
        stack.append((left[node], idx[go_left]))

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), n_node[:n_nodes].copy(), n_pos[:n_nodes].copy())


def tree_apply(feature, threshold, left, right, X):
    X = np.asarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[r]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return node
