import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from workalloc import _pykernels, kernels

needs_compiled = pytest.mark.skipif(not kernels.compiled_available(), reason="extension not built")


def _expand(cost, cap):
    """Replicate worker rows by capacity for a rectangular assignment oracle."""
    rows = np.repeat(np.arange(cost.shape[0]), cap)
    return cost[rows], rows


def test_python_transport_matches_scipy():
    rng = np.random.default_rng(0)
    for _ in range(100):
        W, T = rng.integers(1, 6), rng.integers(1, 10)
        cap = rng.integers(0, 4, W).astype(np.int64)
        cap[0] += max(0, T - cap.sum())
        cost = rng.random((W, T))  # kernel contract: nonnegative costs
        assign = _pykernels.transport_ssp(cost, cap)
        big, _ = _expand(cost, cap)
        r, c = linear_sum_assignment(big)
        assert cost[assign, np.arange(T)].sum() == pytest.approx(big[r, c].sum(), abs=1e-9)
        assert np.all(np.bincount(assign, minlength=W) <= cap)


def test_transport_reports_infeasible():
    assert _pykernels.transport_ssp(np.zeros((1, 3)), np.array([2])) is None


@needs_compiled
def test_backends_bit_identical_transport():
    from workalloc import _ckernels
    rng = np.random.default_rng(1)
    for _ in range(100):
        W, T = rng.integers(1, 6), rng.integers(1, 12)
        cap = rng.integers(0, 4, W).astype(np.int64)
        cap[0] += max(0, T - cap.sum())
        cost = np.round(rng.random((W, T)), 1)  # rounding forces ties
        assert np.array_equal(_pykernels.transport_ssp(cost, cap), _ckernels.transport_ssp(cost, cap))
    assert _ckernels.transport_ssp(np.zeros((1, 3)), np.array([2], dtype=np.int64)) is None


@needs_compiled
def test_backends_bit_identical_trees():
    from workalloc import _ckernels
    rng = np.random.default_rng(2)
    for _ in range(20):
        n, d = int(rng.integers(5, 60)), int(rng.integers(1, 6))
        X = np.round(rng.normal(size=(n, d)), 1)
        y = (rng.random(n) < 0.4).astype(np.int8)
        sample = rng.integers(0, n, n).astype(np.int64)
        min_leaf = int(rng.integers(1, 5))
        max_nodes = 2 * (n // min_leaf) + 1
        order = rng.permuted(np.tile(np.arange(d, dtype=np.int64), (max_nodes, 1)), axis=1)
        mtry = max(1, int(np.sqrt(d)))
        a = _pykernels.build_tree(X, y, sample, order, mtry, min_leaf)
        b = _ckernels.build_tree(X, y, sample, order, mtry, min_leaf)
        for u, v in zip(a, b):
            assert np.array_equal(np.asarray(u), np.asarray(v))
        Xq = rng.normal(size=(30, d))
        assert np.array_equal(_pykernels.tree_apply(*a[:4], Xq), _ckernels.tree_apply(*b[:4], Xq))


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")
