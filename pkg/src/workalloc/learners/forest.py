"""Random forest of Gini trees with hard-voting leaves.

Tree growth runs in :mod:`workalloc.kernels`; this module handles bootstrap
draws, per-node feature subsampling and prediction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels

DEFAULT_TREES = 200


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    n_node: np.ndarray
    n_pos: np.ndarray

    @property
    def node_count(self):
        return self.feature.size

    @property
    def leaf_proba(self):
        return self.n_pos / np.maximum(self.n_node, 1)

    @property
    def leaf_vote(self):
        # strict majority votes 1; an even split votes 0
        return (2 * self.n_pos > self.n_node).astype(np.int64)

    def apply(self, X):
        return kernels.tree_apply(self.feature, self.threshold, self.left, self.right, X)

    def predict_proba(self, X):
        """Training-row fraction of positives in the leaf each row reaches."""
        return self.leaf_proba[self.apply(X)]


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    min_samples_leaf: int
    n_trees: int
    seed: int
    dim: int
    voting: str = "hard"

    def predict_proba(self, X):
        """Fraction of trees voting 1 (``voting="soft"`` averages leaf rates instead)."""
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} features, got {X.shape[1]}")
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            leaves = tree.apply(X)
            acc += tree.leaf_vote[leaves] if self.voting == "hard" else tree.leaf_proba[leaves]
        return acc / len(self.trees)


def n_split_features(d):
    return max(1, int(math.sqrt(d)))


def grow_tree(X, y, sample, min_samples_leaf, rng):
    n_s, d = sample.size, X.shape[1]
    max_nodes = 2 * (n_s // min_samples_leaf) + 1
    feat_order = rng.permuted(np.tile(np.arange(d, dtype=np.int64), (max_nodes, 1)), axis=1)
    arrays = kernels.build_tree(X, y, sample, feat_order, n_split_features(d), min_samples_leaf)
    return Tree(*arrays)


def train_forest(X, y, min_samples_leaf: int = 1, n_trees: int = DEFAULT_TREES, seed: int = 0,
                 voting: str = "hard") -> ForestModel:
    """Bootstrap forest; tree ``t`` draws from ``default_rng(seed + t)``.

    Splits consider ``floor(sqrt(d))`` randomly chosen features per node and
    stop when a child would hold fewer than ``min_samples_leaf`` rows.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int8)
    n = X.shape[0]
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if min_samples_leaf < 1:
        raise ValueError("min_samples_leaf must be >= 1")
    if n < 1 or y.shape != (n,):
        raise ValueError("need at least one row and one label per row")
    if voting not in ("hard", "soft"):
        raise ValueError(f"unknown voting rule {voting!r}")
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng(seed + t)
        sample = rng.integers(0, n, size=n).astype(np.int64)
        trees.append(grow_tree(X, y, sample, min_samples_leaf, rng))
    return ForestModel(tuple(trees), int(min_samples_leaf), int(n_trees), int(seed), X.shape[1], voting)
