"""Classification metrics: rank-sum AUC and smoothed confusion rates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


class UndefinedAUCError(ValueError):
    pass


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney rank-sum statistic.

    Equals P(score_pos > score_neg) + 0.5 * P(tie) over all positive/negative
    pairs. Raises UndefinedAUCError unless both classes are present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError("AUC needs at least one positive and one negative label")
    ranks = rankdata(scores)  # average ranks for ties
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class ClassifierMetrics:
    tp: int
    fp: int
    tn: int
    fn: int
    alpha: float
    ppv: float
    for_rate: float
    tpr: float
    tnr: float
    auc: float | None = None

    @property
    def n(self):
        return self.tp + self.fp + self.tn + self.fn


def confusion_rates(predicted, actual, alpha: float = 1.0) -> ClassifierMetrics:
    """Confusion counts and additively smoothed rates.

    PPV = (TP+a)/(TP+FP+2a), FOR = (FN+a)/(TN+FN+2a), TPR = (TP+a)/(TP+FN+2a),
    TNR = (TN+a)/(TN+FP+2a). With ``alpha=0`` an empty denominator yields NaN.
    """
    predicted = np.asarray(predicted).astype(np.int64)
    actual = np.asarray(actual).astype(np.int64)
    if predicted.shape != actual.shape or predicted.size == 0:
        raise ValueError("predicted and actual must be equal-length and non-empty")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    tp = int(np.sum((predicted == 1) & (actual == 1)))
    fp = int(np.sum((predicted == 1) & (actual == 0)))
    tn = int(np.sum((predicted == 0) & (actual == 0)))
    fn = int(np.sum((predicted == 0) & (actual == 1)))

    def rate(num, den):
        d = den + 2 * alpha
        return (num + alpha) / d if d > 0 else float("nan")

    return ClassifierMetrics(
        tp=tp, fp=fp, tn=tn, fn=fn, alpha=float(alpha),
        ppv=rate(tp, tp + fp),
        for_rate=rate(fn, tn + fn),
        tpr=rate(tp, tp + fn),
        tnr=rate(tn, tn + fp),
    )


def accuracy(scores, labels, threshold=0.5) -> float:
    pred = (np.asarray(scores) >= threshold).astype(np.int64)
    return float(np.mean(pred == np.asarray(labels)))
