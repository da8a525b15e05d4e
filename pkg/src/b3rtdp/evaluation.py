"""Policy rollouts, ADR estimates, anytime curves and parameter sweeps."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from .model import (DiscountedPomdp, GoalPomdp, ModelError, sample_state, sample_successor)
from .solver import B3RTDP, Policy, SolverParams

DEFAULT_HORIZON = 100


class DesyncError(RuntimeError):
    """Simulated observation has zero probability under the tracked belief."""


@dataclass(frozen=True)
class RolloutResult:
    discounted_return: float
    steps: int
    reached_goal: bool


@dataclass
class AdrReport:
    mean: float
    half_width_95: float
    runs: int
    wall_clock_ms: float
    params: dict = field(default_factory=dict)
    heuristic_only: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def rollout(p: Policy, m_discounted: DiscountedPomdp, m_goal: GoalPomdp, horizon: int,
            rng: np.random.Generator) -> RolloutResult:
    """Simulate the policy on the discounted model, tracking the belief in the
    goal model (same state and observation ids below the appended goal)."""
    if m_goal.n_states != m_discounted.n_states + 1:
        raise ModelError("goal model does not correspond to the discounted model")
    terminal = m_discounted.terminal_states
    gamma = m_discounted.discount
    b = m_goal.initial_belief
    s = sample_state(m_discounted.initial_belief, rng)
    total, disc = 0.0, 1.0
    for t in range(horizon):
        if s in terminal:
            return RolloutResult(total, t, True)
        a = p.action(b)
        step = sample_successor(s, a, m_discounted, rng)
        total += disc * -step.cost
        disc *= gamma
        s = step.next_state
        if s in terminal:
            return RolloutResult(total, t + 1, True)
        nxt = None
        for succ in m_goal.successors(b, a):
            if succ.observation == step.observation:
                nxt = succ.belief
                break
        if nxt is None:
            raise DesyncError(f"observation {step.observation} impossible after action {a}")
        b = nxt
    return RolloutResult(total, horizon, s in terminal)


def run_rng(seed: int, run: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, run]))


def evaluate_adr(p: Policy, m_discounted: DiscountedPomdp, m_goal: GoalPomdp, runs: int,
                 horizon: int = DEFAULT_HORIZON, seed: int = 0) -> AdrReport:
    """Mean discounted reward over independent rollouts with a 95% half-width."""
    if runs < 2:
        raise ValueError("evaluate_adr needs runs >= 2")
    t0 = time.perf_counter()
    returns = np.array([rollout(p, m_discounted, m_goal, horizon, run_rng(seed, i)).discounted_return
                        for i in range(runs)])
    sd = float(returns.std(ddof=1))
    return AdrReport(
        mean=float(returns.mean()),
        half_width_95=1.96 * sd / math.sqrt(runs),
        runs=runs,
        wall_clock_ms=(time.perf_counter() - t0) * 1000.0,
        params=p.params.to_dict() if p.params else {},
        heuristic_only=p.heuristic_only,
    )


def anytime_curve(m_discounted: DiscountedPomdp, m_goal: GoalPomdp, params: SolverParams,
                  checkpoints: Iterable[float], runs: int, horizon: int = DEFAULT_HORIZON,
                  eval_seed: int = 0, **solver_kwargs) -> list:
    """ADR of policy snapshots taken at solve-time checkpoints (seconds).

    The solver pauses at trial boundaries, so a snapshot reflects every trial
    finished by its checkpoint. Returns (checkpoint, solve seconds, AdrReport).
    """
    checkpoints = list(checkpoints)
    if any(b < a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be ascending")
    solver = B3RTDP(m_goal, params, **solver_kwargs)
    out = []
    for cp in checkpoints:
        solver.run(until=cp)
        pol = solver.policy(freeze=True)
        out.append((cp, solver.elapsed, evaluate_adr(pol, m_discounted, m_goal, runs, horizon, eval_seed)))
    return out


SWEEP_COLUMNS = ("domain", "D", "alpha", "epsilon", "beta", "tau", "seed", "adr_mean",
                 "adr_ci95", "time_ms", "trials", "table_records")


def sweep(domain: str, m_discounted: DiscountedPomdp, m_goal: GoalPomdp, Ds, alphas, seeds,
          base: SolverParams = SolverParams(), runs: int = 200, horizon: int = DEFAULT_HORIZON,
          lower=None, upper=None) -> list:
    """Solve and evaluate every (D, alpha, seed) combination; one row each."""
    from .heuristics import blind_upper_bound, solve_qmdp

    lower = lower if lower is not None else solve_qmdp(m_goal)
    upper = upper if upper is not None else blind_upper_bound(m_goal)
    rows = []
    for D in Ds:
        for alpha in alphas:
            for seed in seeds:
                params = replace(base, D=D, alpha=alpha, seed=seed)
                solver = B3RTDP(m_goal, params, lower=lower, upper=upper)
                stats = solver.run()
                rep = evaluate_adr(solver.policy(freeze=False), m_discounted, m_goal, runs,
                                   horizon, seed)
                rows.append({
                    "domain": domain, "D": D, "alpha": alpha, "epsilon": params.epsilon,
                    "beta": params.beta, "tau": params.tau, "seed": seed,
                    "adr_mean": rep.mean, "adr_ci95": rep.half_width_95,
                    "time_ms": stats.elapsed * 1000.0, "trials": stats.trials,
                    "table_records": stats.table_records,
                })
    return rows
