"""DPO, UAO and DAO solvers plus the random-policy baseline.

For a fixed model choice per worker the program separates by day into
transportation problems, so every solver here is built from per-day
:func:`assign_max_reward` calls.
"""
from __future__ import annotations

import heapq
import itertools
import time

import numpy as np
from scipy.special import gammaln, logsumexp

from ..core import (
    EXACT_OPTIMAL,
    HEURISTIC,
    OBJ_TOL,
    AllocationSolution,
    InfeasibleError,
    StructuralError,
    objective_of,
    validate_problem,
)
from .transport import assign_max_reward

FREE = -1
DEFAULT_NODE_LIMIT = 10**6
BRUTE_FORCE_LIMITS = (5, 10, 3**5)


def _check(problem):
    bad = validate_problem(problem)
    if bad:
        if all(v.kind == "capacity-shortfall" for v in bad):
            raise InfeasibleError("; ".join(map(str, bad)))
        raise StructuralError(bad)


class DayDecomposition:
    """Cached per-day solves for a problem.

    A day's optimum depends only on the model fixing of the workers with
    capacity that day, so results are memoized on that key.
    """

    def __init__(self, problem, cache_size=200_000):
        self.problem = problem
        self.rewards = problem.rewards()  # NaN in padded model slots
        self.n_models = problem.n_models
        self.days = problem.day_tasks()
        cap = problem.roster.capacity
        self.active = [np.flatnonzero(cap[:, t] > 0) for t in range(len(self.days))]
        self.caps = [cap[self.active[t], t] for t in range(len(self.days))]
        self._cache = [dict() for _ in self.days]
        self._cache_size = cache_size
        self.solves = 0
        # best model per (worker, task) when the worker is free; lowest index on ties
        filled = np.where(np.isnan(self.rewards), -np.inf, self.rewards)
        self.free_model = np.argmax(filled, axis=2)
        self.free_reward = np.take_along_axis(filled, self.free_model[:, :, None], axis=2)[:, :, 0]

    def _day_rewards(self, t, fixing):
        act, tasks = self.active[t], self.days[t]
        sub_fix = fixing[act]
        r = self.free_reward[np.ix_(act, tasks)].copy()
        fixed = sub_fix != FREE
        if fixed.any():
            rows = np.flatnonzero(fixed)
            r[rows] = self.rewards[act[rows][:, None], tasks[None, :], sub_fix[rows][:, None]]
        return r

    def solve_day(self, t, fixing):
        """(global worker per day-task, objective) under a fixing vector (FREE = relaxed)."""
        key = tuple(fixing[self.active[t]])
        cache = self._cache[t]
        hit = cache.get(key)
        if hit is not None:
            return hit
        tasks = self.days[t]
        if tasks.size == 0:
            out = (np.zeros(0, dtype=np.int64), 0.0)
        else:
            local, obj = assign_max_reward(self._day_rewards(t, fixing), self.caps[t])
            out = (self.active[t][local], obj)
            self.solves += 1
        if len(cache) >= self._cache_size:
            cache.clear()
        cache[key] = out
        return out

    def solve(self, fixing):
        """Full-horizon solve; returns (worker per task, summed objective)."""
        fixing = np.asarray(fixing, dtype=np.int64)
        assign = np.empty(self.problem.n_tasks, dtype=np.int64)
        total = 0.0
        for t, tasks in enumerate(self.days):
            a, obj = self.solve_day(t, fixing)
            assign[tasks] = a
            total += obj
        return assign, total

    def models_used(self, assign, fixing):
        """Model each assigned (worker, task) pair draws on under ``fixing``."""
        j = np.arange(assign.size)
        fix = fixing[assign]
        return np.where(fix == FREE, self.free_model[assign, j], fix)


def _solution(problem, assign, models, **kw):
    return AllocationSolution.from_assignment(problem, assign, models, **kw)


def solve_uao(problem) -> AllocationSolution:
    """Exact optimum when every worker has exactly one candidate model."""
    t0 = time.perf_counter()
    _check(problem)
    if np.any(problem.n_models != 1):
        raise ValueError("solve_uao needs exactly one candidate model per worker")
    dd = DayDecomposition(problem)
    fixing = np.zeros(problem.n_workers, dtype=np.int64)
    assign, total = dd.solve(fixing)
    obj = objective_of(problem, assign, fixing)
    return _solution(problem, assign, fixing, objective=obj, status=EXACT_OPTIMAL, bound=obj,
                     wall_time=time.perf_counter() - t0)


def dpo_problem(problem, predictions):
    """The one-model problem whose expectations are the 0/1 point predictions."""
    B = np.asarray(predictions)
    if B.shape != (problem.n_workers, problem.n_tasks):
        raise ValueError(f"predictions must have shape {(problem.n_workers, problem.n_tasks)}")
    if not np.isin(B, (0, 1)).all():
        raise ValueError("DPO predictions must be binary")
    return problem.with_expectation(B[:, :, None].astype(np.float64),
                                     n_models=np.ones(problem.n_workers, dtype=np.int64),
                                     model_kinds=())


def solve_dpo(problem, predictions) -> AllocationSolution:
    """Maximize sum of B_hat * v * x for binary predictions ``B_hat[i, j]``."""
    return solve_uao(dpo_problem(problem, predictions))


def _root_fixing(problem):
    return np.where(problem.n_models == 1, 0, FREE).astype(np.int64)


def dao_upper_bound(problem, fixing=None, decomposition=None) -> float:
    """Relaxation value with free workers using their best model per task.

    ``fixing[i]`` is a model index or -1 for a free worker; ``None`` leaves
    every multi-model worker free.
    """
    dd = decomposition or DayDecomposition(problem)
    if decomposition is None:
        _check(problem)
    fixing = _root_fixing(problem) if fixing is None else np.asarray(fixing, dtype=np.int64)
    return dd.solve(fixing)[1]


def _evaluate_models(dd, models):
    return dd.solve(np.asarray(models, dtype=np.int64))[1]


def solve_dao_heuristic(problem, restarts: int = 4, seed: int = 0, decomposition=None) -> AllocationSolution:
    """Coordinate descent over the model choice vector.

    Starts from each uniform choice (every worker on model k) and from
    ``restarts`` seeded random choices. A pass visits workers in index order
    and moves a worker to its best model given the others; descent stops
    after a pass without an improvement above 1e-9.
    """
    t0 = time.perf_counter()
    if decomposition is None:
        _check(problem)
    dd = decomposition or DayDecomposition(problem)
    W, n_models = problem.n_workers, problem.n_models
    rng = np.random.default_rng(seed)
    starts = [np.minimum(k, n_models - 1) for k in range(int(n_models.max()))]
    starts += [rng.integers(0, n_models) for _ in range(restarts)]

    best_models, best_obj, best_trace = None, -np.inf, []
    seen = set()
    for start in starts:
        key = tuple(start)
        if key in seen:
            continue
        seen.add(key)
        models = start.astype(np.int64).copy()
        obj = _evaluate_models(dd, models)
        trace = [obj]
        improved = True
        while improved:
            improved = False
            for i in range(W):
                if n_models[i] == 1:
                    continue
                cur = models[i]
                move_m, move_obj = cur, obj
                for m in range(n_models[i]):
                    if m == cur:
                        continue
                    models[i] = m
                    cand = _evaluate_models(dd, models)
                    if cand > move_obj + OBJ_TOL:
                        move_m, move_obj = m, cand
                models[i] = move_m
                if move_m != cur:
                    obj = move_obj
                    trace.append(obj)
                    improved = True
        if obj > best_obj + OBJ_TOL:
            best_models, best_obj, best_trace = models.copy(), obj, trace
    assign, _ = dd.solve(best_models)
    sol = _solution(problem, assign, best_models, status=HEURISTIC,
                    wall_time=time.perf_counter() - t0)
    sol.info["trace"] = best_trace
    sol.info["starts"] = len(seen)
    return sol


def solve_dao_exact(problem, node_limit: int = DEFAULT_NODE_LIMIT, restarts: int = 4,
                    seed: int = 0, incumbent=None, decomposition=None) -> AllocationSolution:
    """Best-first branch-and-bound over model choices.

    Each node fixes models for some workers; its bound is the relaxation in
    which free workers pick their best model task by task. A relaxation that
    already uses at most one model per free worker is feasible and closes
    the node. Otherwise branch on the free worker mixing the most models
    (lowest index on ties), one child per candidate model. The incumbent
    starts from :func:`solve_dao_heuristic` unless a feasible ``incumbent``
    solution is passed in. Hitting ``node_limit`` returns
    the incumbent with heuristic status and the remaining bound.
    """
    t0 = time.perf_counter()
    _check(problem)
    dd = decomposition or DayDecomposition(problem)
    W, n_models = problem.n_workers, problem.n_models

    start = incumbent or solve_dao_heuristic(problem, restarts=restarts, seed=seed, decomposition=dd)
    inc_models = start.models.astype(np.int64)
    inc_obj = _evaluate_models(dd, inc_models)

    counter = itertools.count()
    nodes = 0
    heap = []

    def expand(fixing):
        """Evaluate a node; returns a heap entry or None when closed."""
        nonlocal nodes, inc_obj, inc_models
        nodes += 1
        assign, bound = dd.solve(fixing)
        if bound <= inc_obj + OBJ_TOL:
            return None
        used = dd.models_used(assign, fixing)
        free = np.flatnonzero(fixing == FREE)
        mixed = np.zeros(W, dtype=np.int64)
        chosen = fixing.copy()
        for i in free:
            ms = np.unique(used[assign == i])
            mixed[i] = ms.size
            chosen[i] = ms[0] if ms.size else 0
        if mixed.max(initial=0) <= 1:
            inc_obj, inc_models = bound, chosen
            return None
        branch = int(np.argmax(mixed))
        return (-bound, next(counter), fixing, branch)

    entry = expand(_root_fixing(problem))
    if entry is not None:
        heapq.heappush(heap, entry)
    limit_hit = False
    while heap:
        neg_bound, _, fixing, branch = heapq.heappop(heap)
        if -neg_bound <= inc_obj + OBJ_TOL:
            continue
        if nodes >= node_limit:
            heapq.heappush(heap, (neg_bound, -1, fixing, branch))
            limit_hit = True
            break
        for m in range(n_models[branch]):
            child = fixing.copy()
            child[branch] = m
            entry = expand(child)
            if entry is not None:
                heapq.heappush(heap, entry)

    assign, _ = dd.solve(inc_models)
    obj = objective_of(problem, assign, inc_models)
    if limit_hit:
        open_bound = max(-e[0] for e in heap)
        status, bound = HEURISTIC, max(open_bound, obj)
    else:
        status, bound = EXACT_OPTIMAL, obj
    sol = _solution(problem, assign, inc_models, objective=obj, status=status, bound=bound,
                    nodes=nodes, wall_time=time.perf_counter() - t0)
    sol.info["heuristic_objective"] = start.objective
    sol.info["root_bound"] = dao_upper_bound(problem, decomposition=dd)
    return sol


def brute_force_dao(problem) -> AllocationSolution:
    """Enumerate every model choice vector and solve each exactly (test oracle)."""
    _check(problem)
    max_w, max_j, max_combos = BRUTE_FORCE_LIMITS
    combos = int(np.prod(problem.n_models))
    if problem.n_workers > max_w or problem.n_tasks > max_j or combos > max_combos:
        raise ValueError("instance too large for brute force enumeration")
    dd = DayDecomposition(problem)
    best_models, best_obj = None, -np.inf
    for models in itertools.product(*(range(m) for m in problem.n_models)):
        models = np.array(models, dtype=np.int64)
        obj = _evaluate_models(dd, models)
        if obj > best_obj + OBJ_TOL:
            best_models, best_obj = models, obj
    assign, _ = dd.solve(best_models)
    obj = objective_of(problem, assign, best_models)
    return _solution(problem, assign, best_models, objective=obj, status=EXACT_OPTIMAL, bound=obj)


# -- random-policy baseline ------------------------------------------------

def _count_table(caps, n_tasks):
    """log N[i][r]: ways to place r distinct tasks on workers i.. within capacities."""
    W = caps.size
    r = np.arange(n_tasks + 1)
    log_n = np.full((W + 1, n_tasks + 1), -np.inf)
    log_n[W, 0] = 0.0
    log_fact = gammaln(r + 1.0)
    for i in range(W - 1, -1, -1):
        k = np.arange(min(int(caps[i]), n_tasks) + 1)[None, :]
        rows = r[:, None]
        ok = k <= rows
        rest = np.where(ok, rows - k, 0)
        terms = log_fact[rows] - log_fact[k] - log_fact[rest] + log_n[i + 1, rest]
        log_n[i] = logsumexp(np.where(ok, terms, -np.inf), axis=1)
    return log_n, log_fact


def _sample_day(caps, n_tasks, n_samples, rng):
    """Uniform feasible assignments of one day's tasks; (samples, tasks) worker slots."""
    W = caps.size
    log_n, log_fact = _count_table(caps, n_tasks)
    kmax = int(caps.max(initial=0))
    counts = np.zeros((n_samples, W), dtype=np.int64)
    remaining = np.full(n_samples, n_tasks, dtype=np.int64)
    for i in range(W):
        k = np.arange(kmax + 1)
        rr = remaining[:, None]
        ok = (k[None, :] <= caps[i]) & (k[None, :] <= rr)
        kk = np.where(ok, k[None, :], 0)
        logp = (log_fact[rr] - log_fact[kk] - log_fact[rr - kk] + log_n[i + 1, rr - kk]
                - log_n[i, remaining][:, None])
        p = np.where(ok, np.exp(logp), 0.0)
        cdf = np.cumsum(p, axis=1)
        u = rng.random(n_samples) * cdf[:, -1]
        pick = np.minimum((u[:, None] >= cdf).sum(axis=1), kmax)
        counts[:, i] = pick
        remaining -= pick
    order = rng.permuted(np.tile(np.arange(n_tasks), (n_samples, 1)), axis=1)
    slot_owner = np.repeat(np.tile(np.arange(W), (n_samples, 1)).ravel(), counts.ravel())
    slot_owner = slot_owner.reshape(n_samples, n_tasks)
    out = np.empty((n_samples, n_tasks), dtype=np.int64)
    np.put_along_axis(out, order, slot_owner, axis=1)
    return out


def random_policy_samples(problem, n_samples, seed):
    """Objective of ``n_samples`` uniformly drawn (model choice, feasible assignment) pairs."""
    rng = np.random.default_rng(seed)
    W, J = problem.n_workers, problem.n_tasks
    models = rng.integers(0, problem.n_models[None, :], size=(n_samples, W))
    assign = np.empty((n_samples, J), dtype=np.int64)
    cap = problem.roster.capacity
    for t, tasks in enumerate(problem.day_tasks()):
        if tasks.size == 0:
            continue
        act = np.flatnonzero(cap[:, t] > 0)
        local = _sample_day(cap[act, t], tasks.size, n_samples, rng)
        assign[:, tasks] = act[local]
    j = np.arange(J)[None, :]
    m = np.take_along_axis(models, assign, axis=1)
    vals = problem.expectation[assign, j, m] * problem.values[None, :]
    return vals.sum(axis=1)


def random_policy_value(problem, n_samples: int = 10_000, seed: int = 0):
    """Monte Carlo (mean, standard error) of the objective under the random policy.

    Each sample draws a model per worker uniformly from its candidates and a
    feasible assignment uniformly from all assignments meeting coverage and
    daily capacity.
    """
    _check(problem)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    vals = random_policy_samples(problem, n_samples, seed)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    return mean, se
