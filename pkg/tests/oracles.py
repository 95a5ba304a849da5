"""Slow, obviously-correct reference implementations used only by tests."""
from __future__ import annotations

import itertools

import numpy as np

from workalloc.core import TaskInstance, make_problem


def feasible_assignments(problem):
    """Every task->worker vector meeting coverage and daily capacity."""
    W, J = problem.n_workers, problem.n_tasks
    cap = problem.roster.capacity
    days = problem.days
    for assign in itertools.product(range(W), repeat=J):
        load = np.zeros_like(cap)
        for j, i in enumerate(assign):
            load[i, days[j]] += 1
        if (load <= cap).all():
            yield np.array(assign)


def model_choices(problem):
    return (np.array(m) for m in itertools.product(*(range(k) for k in problem.n_models)))


def enumerate_dao(problem):
    """Best objective over all (assignment, model choice) pairs, by direct summation."""
    v = problem.values
    best = -np.inf
    for models in model_choices(problem):
        for assign in feasible_assignments(problem):
            total = 0.0
            for j, i in enumerate(assign):
                total += problem.expectation[i, j, models[i]] * v[j]
            best = max(best, total)
    return best


def random_policy_values(problem):
    """Objective of every feasible (x, y) pair, each listed once."""
    v = problem.values
    vals = []
    assigns = list(feasible_assignments(problem))
    for models in model_choices(problem):
        for assign in assigns:
            vals.append(sum(problem.expectation[i, j, models[i]] * v[j] for j, i in enumerate(assign)))
    return np.array(vals)


def random_policy_expectation(problem):
    """Exact mean objective when (x, y) is uniform over all feasible pairs."""
    return float(np.mean(random_policy_values(problem)))


def pairwise_auc(scores, labels):
    """Fraction of (positive, negative) pairs ranked correctly, ties counting one half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def central_difference(f, x, h=1e-6):
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def random_instance(rng, max_workers=4, max_tasks=8, max_days=2, max_models=3, single_model=False,
                    slack=True):
    """Small random allocation problem with enough capacity to be feasible."""
    W = int(rng.integers(1, max_workers + 1))
    T = int(rng.integers(1, max_days + 1))
    J = int(rng.integers(1, max_tasks + 1))
    days = np.sort(rng.integers(0, T, J))
    per_day = np.bincount(days, minlength=T)
    cap = rng.integers(0, 3, (W, T))
    for t in range(T):
        while cap[:, t].sum() < per_day[t] + (1 if slack and rng.random() < 0.5 else 0):
            cap[rng.integers(W), t] += 1
    M = 1 if single_model else int(rng.integers(1, max_models + 1))
    n_models = rng.integers(1, M + 1, W) if not single_model else np.ones(W, dtype=np.int64)
    P = rng.random((W, J, max(M, 1)))
    tasks = [TaskInstance(f"t{j}", int(days[j]), [0.0], float(rng.normal())) for j in range(J)]
    return make_problem([f"w{i}" for i in range(W)], cap, tasks, P, n_models=n_models)
