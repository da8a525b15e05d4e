"""RTDP-Bel baseline: greedy trials over a single discretised value table.

The table is a ``BoundedValueTable`` whose two bounds are kept equal, so the
greedy ``Policy`` of the bounded solver reads it unchanged.
"""
from __future__ import annotations

import time
from typing import Optional

import numpy as np

from .heuristics import StateHeuristic, solve_qmdp
from .model import GoalPomdp, sample_state, sample_successor
from .solver import Policy, SolveStats, SolverParams
from .value_store import BoundedValueTable


def _greedy(m: GoalPomdp, table: BoundedValueTable, b, cache: dict):
    """Return (argmin_a Q(b, a), min Q, successors of that action)."""
    cost = m.expected_cost(b)
    best, best_q, best_succ = -1, np.inf, None
    for a in range(m.n_actions):
        succ = cache.get((b, a))
        if succ is None:
            succ = m.successors(b, a)
            cache[(b, a)] = succ
        q = cost[a] + sum(s.probability * table.get_bounds(s.belief)[0] for s in succ)
        if q < best_q:
            best, best_q, best_succ = a, q, succ
    return best, best_q, best_succ


def rtdp_bel_trial(m: GoalPomdp, table: BoundedValueTable, max_depth: int,
                   rng: np.random.Generator, cache: dict) -> int:
    """Simulate from a sampled start state, updating V(b) to min_a Q(b, a)."""
    b = m.initial_belief
    s = sample_state(b, rng)
    depth = 0
    while depth < max_depth and not m.is_goal[s]:
        a, q, succ = _greedy(m, table, b, cache)
        table.set_bounds(b, (q, q))
        step = sample_successor(s, a, m, rng)
        s = step.next_state
        b = next(x.belief for x in succ if x.observation == step.observation)
        depth += 1
    return depth


def rtdp_bel_solve(m: GoalPomdp, params: SolverParams, trial_budget: int,
                   rng: Optional[np.random.Generator] = None,
                   lower: Optional[StateHeuristic] = None,
                   time_limit: Optional[float] = None) -> Policy:
    """Run ``trial_budget`` RTDP-Bel trials (fewer if ``time_limit`` seconds
    elapse first) and return the greedy policy over the learned table."""
    if trial_budget < 1:
        raise ValueError("trial_budget must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    lower = lower if lower is not None else solve_qmdp(m)
    table = BoundedValueTable(params.D, lower, lower)
    cache: dict = {}
    stats = SolveStats()
    t0 = time.perf_counter()
    for _ in range(trial_budget):
        if time_limit is not None and time.perf_counter() - t0 >= time_limit:
            stats.timed_out = True
            break
        rtdp_bel_trial(m, table, params.max_depth, rng, cache)
        stats.trials += 1
        if len(cache) > 200_000:
            cache.clear()
    stats.elapsed = time.perf_counter() - t0
    stats.table_records = len(table)
    return Policy(m, table, {}, params, stats)
