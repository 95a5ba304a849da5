"""Lloyd's k-means with k-means++ seeding and restarts."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np


class KMeansResult(NamedTuple):
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float


def _sq_dist(points, centroids):
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def kmeans_plus_plus(points, k, rng):
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    closest = _sq_dist(points, centroids[:1])[:, 0]
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centroids[c] = points[idx]
        closest = np.minimum(closest, _sq_dist(points, centroids[c:c + 1])[:, 0])
    return centroids


def lloyd(points, centroids, max_iter=300):
    """Run Lloyd iterations from ``centroids``.

    Returns ``(labels, centroids, trace)`` where ``trace`` holds the inertia
    after every assignment step. Empty clusters jump to the point farthest
    from its current centroid.
    """
    centroids = np.array(centroids, dtype=np.float64, copy=True)
    k = centroids.shape[0]
    trace = []
    labels = None
    for _ in range(max_iter):
        d2 = _sq_dist(points, centroids)
        new_labels = np.argmin(d2, axis=1)
        best = d2[np.arange(points.shape[0]), new_labels]
        trace.append(float(best.sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        taken = np.zeros(points.shape[0], dtype=bool)
        for c in range(k):
            members = labels == c
            if members.any():
                centroids[c] = points[members].mean(axis=0)
            else:
                far = np.where(taken, -1.0, best)
                idx = int(np.argmax(far))
                taken[idx] = True
                centroids[c] = points[idx]
    return labels, centroids, trace


def kmeans(points, k: int, seed: int = 0, n_init: int = 10, max_iter: int = 300) -> KMeansResult:
    """Best-of-``n_init`` k-means; deterministic for a fixed seed."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    best = None
    for r in range(n_init):
        rng = np.random.default_rng([seed, r])
        labels, centroids, trace = lloyd(points, kmeans_plus_plus(points, k, rng), max_iter)
        d2 = _sq_dist(points, centroids)
        labels = np.argmin(d2, axis=1)
        inertia = float(d2[np.arange(n), labels].sum())
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels, centroids, inertia)
    return best
