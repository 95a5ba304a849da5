"""Per-day transportation subproblem solved by successive shortest paths."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..core import InfeasibleError


@dataclass(frozen=True)
class TransportationInstance:
    """One day: ``reward[i, k]`` for worker ``i`` on the day's ``k``-th task."""

    tasks: np.ndarray
    capacity: np.ndarray
    reward: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tasks", np.asarray(self.tasks, dtype=np.int64))
        object.__setattr__(self, "capacity", np.asarray(self.capacity, dtype=np.int64))
        object.__setattr__(self, "reward", np.atleast_2d(np.asarray(self.reward, dtype=np.float64)))

    @property
    def feasible(self):
        return int(self.capacity.sum()) >= self.tasks.size


def assign_max_reward(reward, capacity):
    """Max-reward cover of every column subject to row capacities.

    Rows with zero capacity are dropped before the flow solve. Rewards are
    shifted per column to nonnegative costs, which leaves the optimal
    assignment unchanged because every column is assigned exactly once.
    Returns ``(row index per column, objective)``.
    """
    reward = np.asarray(reward, dtype=np.float64)
    capacity = np.asarray(capacity, dtype=np.int64)
    n_cols = reward.shape[1]
    if n_cols == 0:
        return np.zeros(0, dtype=np.int64), 0.0
    if int(capacity.sum()) < n_cols:
        raise InfeasibleError(f"capacity {int(capacity.sum())} < {n_cols} tasks")
    rows = np.flatnonzero(capacity > 0)
    r = reward[rows]
    cost = np.ascontiguousarray(r.max(axis=0)[None, :] - r)
    local = kernels.transport_ssp(cost, np.ascontiguousarray(capacity[rows]))
    if local is None:
        raise InfeasibleError("no feasible flow")
    assign = rows[local]
    objective = float(np.sum(reward[assign, np.arange(n_cols)]))
    return assign, objective


def solve_transportation(instance: TransportationInstance):
    """Exact optimum ``(worker per task, objective)`` for one day."""
    return assign_max_reward(instance.reward, instance.capacity)
