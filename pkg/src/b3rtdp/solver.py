"""B3RTDP: bounded RTDP over discretised beliefs with probabilistic action
pruning and a convergence frontier, plus the greedy policy it returns."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .frontier import (ConvergenceFrontier, frontier_terminated, sample_frontier,
                       update_frontier)
from .heuristics import StateHeuristic, blind_upper_bound, solve_qmdp
from .model import Belief, GoalPomdp, ModelError
from .search import BeliefGraph
from .value_store import BoundedValueTable


@dataclass(frozen=True)
class SolverParams:
    D: int = 10
    alpha: float = 0.95
    epsilon: float = 0.01
    beta: float = 0.001
    tau: float = 10.0
    max_depth: int = 200
    seed: int = 0
    # wall-clock cap in seconds; None means no cap
    time_limit: Optional[float] = None

    def __post_init__(self):
        if self.D < 1:
            raise ModelError("D must be a positive integer")
        if not 0.5 < self.alpha <= 1.0:
            raise ModelError("alpha must lie in (0.5, 1]")
        if self.epsilon <= 0 or self.beta <= 0:
            raise ModelError("epsilon and beta must be positive")
        if self.tau <= 1:
            raise ModelError("tau must be > 1")
        if self.max_depth < 1:
            raise ModelError("max_depth must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolveStats:
    trials: int = 0
    backups: int = 0
    elapsed: float = 0.0
    converged: bool = False
    timed_out: bool = False
    table_records: int = 0
    clamp_count: int = 0
    nodes: int = 0


class Policy:
    """Greedy cost-space policy over a frozen value table.

    The chosen action is the argmin of the lower Q bound over the belief's
    surviving actions (all actions for beliefs the solver never touched).
    """

    def __init__(self, model: GoalPomdp, table: BoundedValueTable, action_sets: dict,
                 params: Optional[SolverParams] = None, stats: Optional[SolveStats] = None,
                 cache_size: int = 200_000):
        self.model = model
        self.table = table
        self.action_sets = action_sets
        self.params = params
        self.stats = stats or SolveStats()
        self._cache: dict = {}
        self._cache_size = cache_size

    @property
    def heuristic_only(self) -> bool:
        return self.stats.trials == 0

    def q_lower(self, b: Belief, a: int) -> float:
        cost = float(self.model.cost[b.states, a] @ b.probs)
        succ = self._cache.get((b, a))
        if succ is None:
            succ = self.model.successors(b, a)
            if len(self._cache) < self._cache_size:
                self._cache[(b, a)] = succ
        get = self.table.get_bounds
        return cost + sum(s.probability * get(s.belief)[0] for s in succ)

    def action(self, b: Belief) -> int:
        actions = self.action_sets.get(b)
        if actions is None:
            actions = range(self.model.n_actions)
        if len(actions) == 1:
            return actions[0]
        best, best_q = -1, np.inf
        for a in actions:
            q = self.q_lower(b, a)
            if q < best_q:
                best, best_q = a, q
        return best

    __call__ = action

    def bounds(self, b: Belief):
        return self.table.get_bounds(b)

    def dump(self, fh) -> None:
        """Params header, the value table, then the surviving action sets."""
        fh.write("# params " + json.dumps(self.params.to_dict() if self.params else {}) + "\n")
        fh.write("# stats " + json.dumps(asdict(self.stats)) + "\n")
        self.table.dump(fh, self.model)
        fh.write("# actions\n")
        for b, acts in self.action_sets.items():
            if len(acts) == self.model.n_actions:
                continue
            ent = ",".join(f"{s}:{p!r}" for s, p in zip(b.states.tolist(), b.probs.tolist()))
            fh.write(f"{ent}\t{','.join(map(str, acts))}\n")

    @classmethod
    def load(cls, fh, model: GoalPomdp, lower: StateHeuristic = None,
             upper: StateHeuristic = None) -> "Policy":
        params_line = fh.readline()
        if not params_line.startswith("# params "):
            raise ModelError("policy file must start with a params header")
        raw = json.loads(params_line[len("# params "):])
        params = SolverParams(**raw) if raw else None
        stats_line = fh.readline()
        stats = SolveStats(**json.loads(stats_line[len("# stats "):]))
        lower = lower or solve_qmdp(model)
        upper = upper or blind_upper_bound(model)
        table = BoundedValueTable.load(fh, model, lower, upper)
        action_sets = {}
        for line in fh:
            if not line.strip():
                continue
            ent, acts = line.rstrip("\n").split("\t")
            pairs = [kv.split(":") for kv in ent.split(",")]
            b = Belief([int(s) for s, _ in pairs], [float(p) for _, p in pairs], check=False)
            action_sets[b] = [int(a) for a in acts.split(",")]
        return cls(model, table, action_sets, params, stats)


class B3RTDP:
    """One B3RTDP solve. ``step`` runs a single frontier-sampled trial so the
    caller can pause at trial boundaries; ``run`` loops until convergence."""

    def __init__(self, model: GoalPomdp, params: SolverParams = SolverParams(),
                 lower: Optional[StateHeuristic] = None, upper: Optional[StateHeuristic] = None,
                 clock: Callable[[], float] = time.perf_counter,
                 progress: Optional[Callable[[dict], None]] = None,
                 check_frontier: bool = False):
        self.model = model
        self.params = params
        lower = lower if lower is not None else solve_qmdp(model)
        upper = upper if upper is not None else blind_upper_bound(model)
        self.table = BoundedValueTable(params.D, lower, upper)
        self.graph = BeliefGraph(model, self.table)
        self.root = model.initial_belief
        self.frontier = ConvergenceFrontier(self.root, check=check_frontier)
        self.rng = np.random.default_rng(params.seed)
        self.clock = clock
        self.progress = progress
        self.log: list = []
        self.stats = SolveStats()
        self._elapsed = 0.0

    @property
    def converged(self) -> bool:
        return frontier_terminated(self.frontier, self.params, self.table)

    def run_trial(self, root: Belief) -> int:
        """Forward gap-seeking descent, then backward prune-and-backup sweep."""
        g, p = self.graph, self.params
        stack = []
        b = root
        while b is not None and len(stack) < p.max_depth:
            node = g.node(b)
            stack.append(node)
            a = g.bellman_backup(node)
            b = g.pick_next_belief(node, a, self.table.gap(root), p.tau, self.rng)
        visited = len(stack)
        while stack:
            node = stack.pop()
            q = g.all_q(node)
            a = min(node.actions, key=lambda x: (q[x][0], x))
            g.prune_actions(node, a, p.alpha, q)
            g.bellman_backup(node, q)
        return visited

    def step(self) -> bool:
        """One sample/trial/update round; False when already converged."""
        if self.converged:
            self.stats.converged = True
            return False
        t0 = self.clock()
        b = sample_frontier(self.frontier, self.table, self.rng)
        self.run_trial(b)
        update_frontier(self.frontier, self.params, self.table, self.graph)
        self._elapsed += self.clock() - t0
        self.stats.trials += 1
        lo, hi = self.table.get_bounds(self.root)
        rec = {
            "trial": self.stats.trials,
            "elapsed_ms": round(self._elapsed * 1000.0, 3),
            "root_lower": lo,
            "root_upper": hi,
            "table_size": len(self.table),
            "frontier_total": self.frontier.total,
            "frontier_size": len(self.frontier),
        }
        self.log.append(rec)
        if self.progress is not None:
            self.progress(rec)
        return True

    @property
    def elapsed(self) -> float:
        return self._elapsed

    def run(self, until: Optional[float] = None) -> SolveStats:
        """Iterate until converged, the cap, or ``until`` seconds of solve time."""
        limit = self.params.time_limit
        while True:
            if until is not None and self._elapsed >= until:
                break
            if limit is not None and self._elapsed >= limit:
                self.stats.timed_out = True
                break
            if not self.step():
                break
        self.stats.converged = self.converged
        return self._refresh_stats()

    def _refresh_stats(self) -> SolveStats:
        s = self.stats
        s.elapsed = self._elapsed
        s.backups = self.graph.backups
        s.table_records = len(self.table)
        s.clamp_count = self.table.clamp_count
        s.nodes = len(self.graph.nodes)
        return s

    def policy(self, freeze: bool = True) -> Policy:
        stats = SolveStats(**asdict(self._refresh_stats()))
        table = self.table.copy() if freeze else self.table
        sets = {b: (tuple(n.actions) if freeze else n.actions) for b, n in self.graph.nodes.items()
                if len(n.actions) < self.model.n_actions}
        return Policy(self.model, table, sets, self.params, stats)


def solve(m: GoalPomdp, params: SolverParams = SolverParams(), **kwargs) -> Policy:
    """Run B3RTDP to convergence (or its wall-clock cap) and return the greedy policy."""
    solver = B3RTDP(m, params, **kwargs)
    solver.run()
    return solver.policy(freeze=False)


def run_trial(root: Belief, solver: B3RTDP) -> int:
    return solver.run_trial(root)


def policy_action(p: Policy, b: Belief) -> int:
    return p.action(b)
