"""Bounded belief-space RTDP for tabular POMDPs."""
from .model import (Belief, DiscountedPomdp, GoalPomdp, ModelError, belief_update,
                    observation_probability, transform_to_goal_pomdp)
from .heuristics import StateHeuristic, belief_heuristic, blind_upper_bound, solve_qmdp
from .value_store import BoundedValueTable, DiscretizedBeliefKey, discretize_belief
from .search import QInterval, dominance_probability
from .frontier import ConvergenceFrontier
from .solver import B3RTDP, Policy, SolverParams, policy_action, solve
from .rtdp_bel import rtdp_bel_solve
from .evaluation import AdrReport, RolloutResult, anytime_curve, evaluate_adr, rollout, sweep
from .pomdp_format import load_pomdp, parse_pomdp_file, write_pomdp

__all__ = [
    "Belief", "DiscountedPomdp", "GoalPomdp", "ModelError", "belief_update",
    "observation_probability", "transform_to_goal_pomdp", "StateHeuristic",
    "belief_heuristic", "blind_upper_bound", "solve_qmdp", "BoundedValueTable",
    "DiscretizedBeliefKey", "discretize_belief", "QInterval", "dominance_probability",
    "ConvergenceFrontier", "B3RTDP", "Policy", "SolverParams", "policy_action", "solve",
    "rtdp_bel_solve", "AdrReport", "RolloutResult", "anytime_curve", "evaluate_adr",
    "rollout", "sweep", "load_pomdp", "parse_pomdp_file", "write_pomdp",
]
