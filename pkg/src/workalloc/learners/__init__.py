"""From-scratch learning primitives used by the behavior-model pipelines."""
import numpy as np

from .forest import ForestModel, Tree, train_forest
from .kmeans import KMeansResult, kmeans, lloyd
from .logistic import LinearModel, log_loss_gradient, log_loss_objective, train_logistic
from .metrics import ClassifierMetrics, UndefinedAUCError, accuracy, confusion_rates, roc_auc
from .preprocess import OneHotEncoder, Standardizer
from .validation import cross_validate, stratified_folds

LAMBDA_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)


def predict_proba(model, features):
    """P(action = 1 | features) for a LinearModel or ForestModel.

    Accepts one feature vector (returns a float) or a 2-D batch.
    """
    arr = np.asarray(features, dtype=np.float64)
    out = model.predict_proba(np.atleast_2d(arr))
    return float(out[0]) if arr.ndim == 1 else out


__all__ = [
    "ClassifierMetrics", "ForestModel", "KMeansResult", "LAMBDA_GRID", "LinearModel",
    "OneHotEncoder", "Standardizer", "Tree", "UndefinedAUCError", "accuracy",
    "confusion_rates", "cross_validate", "kmeans", "lloyd", "log_loss_gradient",
    "log_loss_objective", "predict_proba", "roc_auc", "stratified_folds", "train_forest",
    "train_logistic",
]
