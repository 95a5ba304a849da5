from .solvers import (
    DEFAULT_NODE_LIMIT,
    FREE,
    DayDecomposition,
    brute_force_dao,
    dao_upper_bound,
    dpo_problem,
    random_policy_samples,
    random_policy_value,
    solve_dao_exact,
    solve_dao_heuristic,
    solve_dpo,
    solve_uao,
)
from .transport import TransportationInstance, assign_max_reward, solve_transportation

__all__ = [
    "DEFAULT_NODE_LIMIT", "FREE", "DayDecomposition", "TransportationInstance",
    "assign_max_reward", "brute_force_dao", "dao_upper_bound", "dpo_problem",
    "random_policy_samples", "random_policy_value", "solve_dao_exact", "solve_dao_heuristic",
    "solve_dpo", "solve_transportation", "solve_uao",
]
