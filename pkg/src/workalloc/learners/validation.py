"""Stratified k-fold cross-validation for one hyperparameter."""
from __future__ import annotations

import numpy as np

from .metrics import UndefinedAUCError, accuracy, roc_auc


def stratified_folds(y, folds, seed):
    """Fold id per row; each class is shuffled then dealt round-robin."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(y.size, dtype=np.int64)
    offset = 0
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        fold_of[idx] = (np.arange(idx.size) + offset) % folds
        offset += idx.size
    return fold_of


def cross_validate(X, y, grid, fit, folds=10, seed=0, metric="auc"):
    """Return the grid value with the best mean validation score.

    ``fit(X, y, value)`` must return an object with ``predict_proba``. Folds
    whose validation slice holds one class are skipped for AUC; if every fold
    is skipped the search falls back to accuracy. Ties go to the larger grid
    value, which is the more regularized setting for both the ridge weight
    and the forest leaf size.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty hyperparameter grid")
    if len(grid) == 1:
        return grid[0]
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if folds < 2 or y.size < folds:
        raise ValueError(f"need folds >= 2 and at least {folds} rows")
    if metric not in ("auc", "accuracy"):
        raise ValueError(f"unknown metric {metric!r}")
    fold_of = stratified_folds(y, folds, seed)

    preds = {}
    for value in grid:
        preds[value] = []
        for f in range(folds):
            tr, va = fold_of != f, fold_of == f
            if not va.any() or not tr.any():
                continue
            model = fit(X[tr], y[tr], value)
            preds[value].append((model.predict_proba(X[va]), y[va]))

    def mean_score(value, use):
        scores = []
        for p, yy in preds[value]:
            if use == "auc":
                try:
                    scores.append(roc_auc(p, yy))
                except UndefinedAUCError:
                    continue
            else:
                scores.append(accuracy(p, yy))
        return float(np.mean(scores)) if scores else None

    use = metric
    table = {v: mean_score(v, use) for v in grid}
    if all(s is None for s in table.values()):
        use = "accuracy"
        table = {v: mean_score(v, use) for v in grid}

    best_value, best_score = None, -np.inf
    for value in sorted(grid):
        s = table[value]
        if s is not None and s >= best_score:
            best_value, best_score = value, s
    return best_value
