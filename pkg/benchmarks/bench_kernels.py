"""Time the compiled kernels against their pure-Python twins.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends are imported directly, so the result does not depend on
``WORKALLOC_PURE_PYTHON``. Outputs are checked for equality before timing.
"""
import argparse
import time

import numpy as np

from workalloc import _pykernels

try:
    from workalloc import _ckernels
except ImportError:
    _ckernels = None


def transport_case(rng, workers=20, tasks=25):
    cap = rng.integers(1, 3, workers).astype(np.int64)
    cap[0] += max(0, tasks - cap.sum())
    return np.ascontiguousarray(rng.random((workers, tasks))), cap


def tree_case(rng, n=2000, d=40, min_leaf=10):
    X = rng.normal(size=(n, d))
    y = (X[:, 0] + rng.normal(size=n) > 0).astype(np.int8)
    sample = rng.integers(0, n, n).astype(np.int64)
    max_nodes = 2 * (n // min_leaf) + 1
    order = rng.permuted(np.tile(np.arange(d, dtype=np.int64), (max_nodes, 1)), axis=1)
    return X, y, sample, order, int(np.sqrt(d)), min_leaf


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; only the Python backend is available")
        return
    rng = np.random.default_rng(0)
    cost, cap = transport_case(rng)
    tree_args = tree_case(rng)
    tree = _ckernels.build_tree(*tree_args)
    Xq = rng.normal(size=(5000, tree_args[0].shape[1]))

    cases = {
        "transport_ssp 20x25": lambda k: k.transport_ssp(cost, cap),
        "build_tree n=2000 d=40": lambda k: k.build_tree(*tree_args),
        "tree_apply 5000 rows": lambda k: k.tree_apply(*tree[:4], Xq),
    }
    print(f"{'kernel':<26}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, call in cases.items():
        a, b = call(_pykernels), call(_ckernels)
        same = all(np.array_equal(np.asarray(u), np.asarray(v)) for u, v in zip(a, b)) \
            if isinstance(a, tuple) else np.array_equal(a, b)
        if not same:
            raise SystemExit(f"{name}: backends disagree")
        py = best_of(lambda: call(_pykernels), args.repeat)
        cy = best_of(lambda: call(_ckernels), args.repeat)
        print(f"{name:<26}{1000 * py:>12.2f}{1000 * cy:>12.3f}{py / cy:>9.0f}x")


if __name__ == "__main__":
    main()
