"""Problem data model, structural validation and objective evaluation.

Workers, tasks and models are addressed by dense integer indices; the
string ids on :class:`TaskInstance` and :class:`WorkerRoster` form the
symbol table used for serialization.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

OBJ_TOL = 1e-9

EXACT_OPTIMAL = "exact-optimal"
HEURISTIC = "heuristic"
INFEASIBLE = "infeasible"
SOLVER_STATUSES = (EXACT_OPTIMAL, HEURISTIC, INFEASIBLE)


class StructuralError(ValueError):
    """A solution or problem breaks one of its structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations) or "structural violation")


class InfeasibleError(RuntimeError):
    """No assignment covers every task within the daily capacities."""


class Violation(NamedTuple):
    kind: str
    index: tuple

    def __str__(self):
        return f"{self.kind}{self.index}"


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TaskInstance:
    id: str
    day: int
    features: np.ndarray
    value: float
    worker_id: str | None = None  # historical reviewer, when known

    def __post_init__(self):
        object.__setattr__(self, "features", _frozen(self.features, np.float64))
        object.__setattr__(self, "day", int(self.day))
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class DecisionRecord:
    worker_id: str
    task: TaskInstance
    decision: int

    def __post_init__(self):
        if self.decision not in (0, 1):
            raise ValueError(f"decision must be 0 or 1, got {self.decision!r}")
        object.__setattr__(self, "decision", int(self.decision))


@dataclass(frozen=True)
class WorkerRoster:
    worker_ids: tuple
    capacity: np.ndarray  # (n_workers, n_days) nonnegative ints

    def __post_init__(self):
        object.__setattr__(self, "worker_ids", tuple(self.worker_ids))
        object.__setattr__(self, "capacity", _frozen(self.capacity, np.int64))

    @property
    def n_workers(self):
        return len(self.worker_ids)

    @property
    def n_days(self):
        return self.capacity.shape[1] if self.capacity.ndim == 2 else 0

    def index(self, worker_id):
        return self.worker_ids.index(worker_id)


@dataclass(frozen=True)
class AllocationProblem:
    """Everything a solver needs.

    ``expectation[i, j, m]`` is the adjusted expected behavior of worker ``i``
    on task ``j`` under candidate model ``m``; entries with
    ``m >= n_models[i]`` are padding and ignored.
    """

    roster: WorkerRoster
    tasks: tuple
    expectation: np.ndarray
    n_models: np.ndarray
    model_kinds: tuple = ()  # per worker: tuple of kind labels, optional

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "expectation", _frozen(self.expectation, np.float64))
        object.__setattr__(self, "n_models", _frozen(self.n_models, np.int64))
        object.__setattr__(self, "model_kinds", tuple(tuple(k) for k in self.model_kinds))

    @property
    def n_workers(self):
        return self.roster.n_workers

    @property
    def n_tasks(self):
        return len(self.tasks)

    @property
    def max_models(self):
        return self.expectation.shape[2] if self.expectation.ndim == 3 else 0

    @property
    def values(self):
        return np.array([t.value for t in self.tasks], dtype=np.float64)

    @property
    def days(self):
        return np.array([t.day for t in self.tasks], dtype=np.int64)

    def day_tasks(self):
        """Task indices for each day of the horizon, in task order."""
        days = self.days
        return [np.flatnonzero(days == t) for t in range(self.roster.n_days)]

    def model_mask(self):
        """Boolean (workers, models) mask of real candidate slots."""
        return np.arange(self.max_models)[None, :] < self.n_models[:, None]

    def rewards(self):
        """P[i, j, m] * v_j with padded slots set to NaN."""
        r = self.expectation * self.values[None, :, None]
        return np.where(self.model_mask()[:, None, :], r, np.nan)

    def with_expectation(self, expectation, n_models=None, model_kinds=None):
        return AllocationProblem(
            roster=self.roster,
            tasks=self.tasks,
            expectation=expectation,
            n_models=self.n_models if n_models is None else n_models,
            model_kinds=self.model_kinds if model_kinds is None else model_kinds,
        )


@dataclass(frozen=True)
class AllocationSolution:
    x: np.ndarray  # (workers, tasks)
    y: np.ndarray  # (workers, models)
    z: np.ndarray  # (workers, tasks, models)
    objective: float
    status: str = EXACT_OPTIMAL
    bound: float | None = None
    nodes: int = 0
    wall_time: float | None = None
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, _frozen(getattr(self, name), np.int8))
        if self.status not in SOLVER_STATUSES:
            raise ValueError(f"unknown solver status {self.status!r}")

    @classmethod
    def from_assignment(cls, problem, assign, models, objective=None, **kw):
        """Build dense x/y/z from a task->worker vector and a worker->model vector."""
        assign = np.asarray(assign, dtype=np.int64)
        models = np.asarray(models, dtype=np.int64)
        W, J, M = problem.n_workers, problem.n_tasks, max(problem.max_models, 1)
        x = np.zeros((W, J), dtype=np.int8)
        x[assign, np.arange(J)] = 1
        y = np.zeros((W, M), dtype=np.int8)
        y[np.arange(W), models] = 1
        z = np.zeros((W, J, M), dtype=np.int8)
        z[assign, np.arange(J), models[assign]] = 1
        if objective is None:
            objective = objective_of(problem, assign, models)
        return cls(x=x, y=y, z=z, objective=float(objective), **kw)

    @property
    def assignment(self):
        """Worker index for each task."""
        return np.argmax(self.x, axis=0)

    @property
    def models(self):
        """Selected model index for each worker."""
        return np.argmax(self.y, axis=1)

    @property
    def gap(self):
        if self.bound is None:
            return None
        return max(0.0, float(self.bound) - self.objective)


def objective_of(problem, assign, models):
    """Sum of P*v over the assignment, accumulated in task order."""
    assign = np.asarray(assign, dtype=np.int64)
    models = np.asarray(models, dtype=np.int64)
    j = np.arange(problem.n_tasks)
    terms = problem.expectation[assign, j, models[assign]] * problem.values
    return float(np.sum(terms))


def validate_problem(problem: AllocationProblem) -> list:
    """Return every structural violation in ``problem`` (empty list when valid)."""
    out = []
    roster = problem.roster
    W, J = roster.n_workers, problem.n_tasks
    cap = roster.capacity
    if cap.ndim != 2 or cap.shape[0] != W:
        out.append(Violation("capacity-shape", tuple(cap.shape)))
        return out
    n_days = cap.shape[1]
    for i, t in zip(*np.nonzero(cap < 0)):
        out.append(Violation("capacity-negative", (int(i), int(t))))

    P = problem.expectation
    if P.ndim != 3 or P.shape[0] != W or P.shape[1] != J:
        out.append(Violation("expectation-shape", tuple(P.shape)))
        return out
    if problem.n_models.shape != (W,):
        out.append(Violation("model-count-shape", tuple(problem.n_models.shape)))
        return out
    for i, m in enumerate(problem.n_models):
        if m < 1 or m > P.shape[2]:
            out.append(Violation("model-count", (i, int(m))))
    if problem.model_kinds and (
        len(problem.model_kinds) != W
        or any(len(k) != m for k, m in zip(problem.model_kinds, problem.n_models))
    ):
        out.append(Violation("model-kinds", (len(problem.model_kinds),)))

    dims = {t.features.shape for t in problem.tasks}
    if len(dims) > 1:
        first = problem.tasks[0].features.shape
        for j, t in enumerate(problem.tasks):
            if t.features.shape != first:
                out.append(Violation("feature-dimension", (j,)))

    counts = np.zeros(n_days, dtype=np.int64)
    for j, t in enumerate(problem.tasks):
        if not 0 <= t.day < n_days:
            out.append(Violation("day-range", (j, t.day)))
        else:
            counts[t.day] += 1
    supply = cap.sum(axis=0)
    for t in np.flatnonzero(supply < counts):
        out.append(Violation("capacity-shortfall", (int(t),)))

    mask = problem.model_mask()[:, None, :]
    bad = mask & ~((P >= 0.0) & (P <= 1.0))
    for i, j, m in zip(*np.nonzero(bad)):
        out.append(Violation("probability-range", (int(i), int(j), int(m))))
    return out


def solution_violations(problem, solution) -> list:
    """Violated AllocationSolution invariants of ``solution`` for ``problem``."""
    out = []
    W, J, M = problem.n_workers, problem.n_tasks, max(problem.max_models, 1)
    x, y, z = solution.x, solution.y, solution.z
    if x.shape != (W, J) or y.shape[0] != W or z.shape[:2] != (W, J) or y.shape[1] != z.shape[2]:
        return [Violation("solution-shape", (x.shape, y.shape, z.shape))]
    if y.shape[1] < M:
        return [Violation("solution-shape", (x.shape, y.shape, z.shape))]
    for arr, name in ((x, "x"), (y, "y"), (z, "z")):
        if not np.isin(arr, (0, 1)).all():
            out.append(Violation("non-binary", (name,)))
    mask = problem.model_mask()
    full_mask = np.zeros(y.shape, dtype=bool)
    full_mask[:, : mask.shape[1]] = mask
    for i, m in zip(*np.nonzero((y == 1) & ~full_mask)):
        out.append(Violation("model-out-of-range", (int(i), int(m))))
    for j in np.flatnonzero(x.sum(axis=0) != 1):
        out.append(Violation("coverage", (int(j),)))
    days = problem.days
    cap = problem.roster.capacity
    for t in range(cap.shape[1]):
        load = x[:, days == t].sum(axis=1)
        for i in np.flatnonzero(load > cap[:, t]):
            out.append(Violation("capacity", (int(i), t)))
    for i in np.flatnonzero(y.sum(axis=1) != 1):
        out.append(Violation("model-choice", (int(i),)))
    for i, j in zip(*np.nonzero(z.sum(axis=2) != x)):
        out.append(Violation("link-z-x", (int(i), int(j))))
    for i, j, m in zip(*np.nonzero(z > y[:, None, :])):
        out.append(Violation("link-z-y", (int(i), int(j), int(m))))
    return out


def evaluate_solution(problem: AllocationProblem, solution: AllocationSolution) -> float:
    """Objective sum of P[i, j, m] * v_j * z[i, j, m]; raises StructuralError on broken invariants."""
    bad = solution_violations(problem, solution)
    if bad:
        raise StructuralError(bad)
    M = problem.max_models
    z = solution.z[:, :, :M].astype(np.float64)
    return float(np.sum(problem.expectation * problem.values[None, :, None] * z))


def make_problem(worker_ids, capacity, tasks: Sequence[TaskInstance], expectation, n_models=None,
                 model_kinds=()):
    """Convenience constructor; ``n_models`` defaults to the full model axis."""
    expectation = np.asarray(expectation, dtype=np.float64)
    if expectation.ndim == 2:
        expectation = expectation[:, :, None]
    if n_models is None:
        n_models = np.full(len(worker_ids), expectation.shape[2], dtype=np.int64)
    return AllocationProblem(
        roster=WorkerRoster(worker_ids=tuple(worker_ids), capacity=np.asarray(capacity)),
        tasks=tuple(tasks),
        expectation=expectation,
        n_models=n_models,
        model_kinds=model_kinds,
    )
