"""L2-regularized logistic regression fitted by damped Newton iterations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

GRAD_TOL = 1e-6
MAX_ITER = 10_000


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    lam: float = 0.0
    single_class: bool = False
    n_iter: int = 0

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if not (np.all(np.isfinite(w)) and np.isfinite(self.bias)):
            raise ValueError("LinearModel parameters must be finite")

    @property
    def dim(self):
        return self.weights.size

    def decision_function(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} features, got {X.shape[1]}")
        return X @ self.weights + self.bias

    def predict_proba(self, X):
        return expit(self.decision_function(X))


def log_loss_objective(w, b, X, y, lam):
    """Mean log-loss plus lam * ||w||^2 (bias unpenalized)."""
    z = X @ w + b
    # log(1+e^z) - y z, computed stably
    loss = np.mean(np.logaddexp(0.0, z) - y * z)
    return float(loss + lam * np.dot(w, w))


def log_loss_gradient(w, b, X, y, lam):
    """Gradient of :func:`log_loss_objective` as ``(grad_w, grad_b)``."""
    p = expit(X @ w + b)
    r = (p - y) / X.shape[0]
    return X.T @ r + 2.0 * lam * w, float(np.sum(r))


def train_logistic(X, y, lam: float = 1.0, max_iter: int = MAX_ITER, tol: float = GRAD_TOL) -> LinearModel:
    """Fit weights minimizing mean log-loss + lam * ||w||^2.

    Newton steps with backtracking; stops once the gradient norm is at most
    ``tol`` or after ``max_iter`` iterations. Single-class input returns a
    zero-weight model whose bias is the logit of the smoothed class rate.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    if n < 1 or y.shape != (n,):
        raise ValueError("need at least one row and one label per row")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0/1")
    if lam < 0:
        raise ValueError("lam must be nonnegative")

    pos = y.sum()
    if pos == 0 or pos == n:
        b = np.log(2 * n + 1.0) * (1.0 if pos == n else -1.0)
        return LinearModel(np.zeros(d), float(b), lam=lam, single_class=True)

    w = np.zeros(d)
    b = float(np.log(pos / (n - pos)))  # base-rate start
    f = log_loss_objective(w, b, X, y, lam)
    Xa = np.hstack([X, np.ones((n, 1))])
    reg = np.full(d + 1, 2.0 * lam)
    reg[-1] = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        gw, gb = log_loss_gradient(w, b, X, y, lam)
        g = np.append(gw, gb)
        if np.linalg.norm(g) <= tol:
            break
        p = expit(X @ w + b)
        s = p * (1.0 - p) / n
        H = (Xa * s[:, None]).T @ Xa + np.diag(reg)
        H[np.diag_indices_from(H)] += 1e-12
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = g
        t = 1.0
        while True:
            w_new = w - t * step[:-1]
            b_new = b - t * step[-1]
            f_new = log_loss_objective(w_new, b_new, X, y, lam)
            if f_new <= f - 1e-4 * t * float(g @ step) or t < 1e-10:
                break
            t *= 0.5
        if f_new > f:  # no descent possible at machine precision
            break
        w, b, f = w_new, b_new, f_new
    return LinearModel(w, float(b), lam=lam, n_iter=it)
