"""Bounded Bellman backups, probabilistic action pruning and gap-driven sampling.

Everything here works in cost space: lower bounds are optimistic, and the
greedy action is the argmin of the lower Q bound (ties to the lowest id).
"""
from __future__ import annotations

from collections import deque
from typing import NamedTuple, Optional

import numpy as np

from .model import PRUNE_TOL, Belief, GoalPomdp
from ._kernels import expand
from .value_store import CEIL_SLACK, BoundedValueTable


class QInterval(NamedTuple):
    q_lower: float
    q_upper: float

    @property
    def width(self) -> float:
        return self.q_upper - self.q_lower


def _dominance_ordered(la, ha, lb, hb) -> float:
    """Pr(X < Y) for X ~ U(la, ha), Y ~ U(lb, hb), given (la, ha) <= (lb, hb)."""
    if ha <= lb:
        # includes two equal points, which the caller handles first
        return 1.0
    if hb <= la:
        return 0.0
    ga, gb = ha - la, hb - lb
    if ga == 0.0:
        return min(1.0, max(0.0, (hb - la) / gb))
    if gb == 0.0:
        return min(1.0, max(0.0, (lb - la) / ga))
    hmin = min(ha, hb)
    # X below lb always wins; on [lb, hmin] X wins with Pr(Y > x). Ratios
    # rather than a product of widths keep tiny intervals from underflowing.
    rect = (lb - la) / ga
    tri = ((hmin - lb) / ga) * ((hb - 0.5 * (hmin + lb)) / gb)
    return min(1.0, max(0.0, rect + tri))


def dominance_probability(qa: QInterval, qb: QInterval) -> float:
    """Pr(Q*(a) < Q*(b)) when each Q* is uniform on its interval.

    Zero-width intervals are point masses; identical intervals give 0.5.
    The pair is put in a canonical order before integrating, so swapping the
    arguments always returns the exact complement.
    """
    la, ha = qa
    lb, hb = qb
    if la == lb and ha == hb:
        return 0.5
    if (la, ha) <= (lb, hb):
        return _dominance_ordered(la, ha, lb, hb)
    return 1.0 - _dominance_ordered(lb, hb, la, ha)


class Expansion:
    """Cached successors of one (belief, action) pair, with their table keys
    and heuristic bounds precomputed. Successor beliefs are built lazily."""

    __slots__ = ("observations", "probs", "keys", "h_lower", "h_upper", "_arrays", "_beliefs")

    def __init__(self, model: GoalPomdp, b: Belief, a: int, table: BoundedValueTable):
        obs, pr, off, st, pp, hl, hh, k1, k2 = expand(
            *model.kernel_args[a], b.states, b.probs, model.n_states, PRUNE_TOL,
            table.D, CEIL_SLACK, table.lower.values, table.upper.values)
        self.observations = obs.tolist()
        self.probs = pr.tolist()
        self.h_lower = hl.tolist()
        self.h_upper = hh.tolist()
        self.keys = [(x << 64) | y for x, y in zip(k1.tolist(), k2.tolist())]
        self._arrays = (off, st, pp, table.D)
        self._beliefs = [None] * len(self.probs)

    def belief(self, g: int) -> Belief:
        bel = self._beliefs[g]
        if bel is None:
            off, st, pp, D = self._arrays
            i, j = off[g], off[g + 1]
            bel = Belief(st[i:j], pp[i:j], check=False)
            bel._dkeys = (D, self.keys[g])
            self._beliefs[g] = bel
        return bel

    @property
    def beliefs(self) -> list:
        return [self.belief(g) for g in range(len(self.probs))]


class BeliefNode:
    """Search bookkeeping for one exact belief: surviving actions and successors."""

    __slots__ = ("belief", "actions", "cost", "expansions")

    def __init__(self, belief: Belief, model: GoalPomdp):
        self.belief = belief
        self.actions = list(range(model.n_actions))
        self.cost = model.expected_cost(belief).tolist()
        self.expansions = {}

    def __repr__(self):
        return f"BeliefNode({self.belief!r}, actions={self.actions})"


class BeliefGraph:
    """Belief nodes of one solve, sharing a model and a value table.

    Successor expansions are cached per node; at most ``max_expansions`` are
    kept, oldest evicted first (they are recomputed on demand).
    """

    def __init__(self, model: GoalPomdp, table: BoundedValueTable, max_expansions: int = 100_000):
        self.model = model
        self.table = table
        self.nodes: dict = {}
        self.backups = 0
        self.max_expansions = max_expansions
        self._fifo: deque = deque()

    def node(self, b: Belief) -> BeliefNode:
        n = self.nodes.get(b)
        if n is None:
            n = BeliefNode(b, self.model)
            self.nodes[b] = n
        return n

    def expansion(self, node: BeliefNode, a: int) -> Expansion:
        e = node.expansions.get(a)
        if e is None:
            e = Expansion(self.model, node.belief, a, self.table)
            node.expansions[a] = e
            self._fifo.append((node, a))
            if len(self._fifo) > self.max_expansions:
                old, oa = self._fifo.popleft()
                old.expansions.pop(oa, None)
        return e

    def successor_bounds(self, e: Expansion):
        get = self.table.table.get
        out = []
        for k, hl, hh in zip(e.keys, e.h_lower, e.h_upper):
            rec = get(k)
            out.append(rec if rec is not None else (hl, hh))
        return out

    def q_bounds(self, node: BeliefNode, a: int) -> QInterval:
        e = self.expansion(node, a)
        lo = hi = 0.0
        for p, (l, h) in zip(e.probs, self.successor_bounds(e)):
            lo += p * l
            hi += p * h
        c = node.cost[a]
        return QInterval(c + lo, c + hi)

    def all_q(self, node: BeliefNode) -> dict:
        return {a: self.q_bounds(node, a) for a in node.actions}

    def bellman_backup(self, node: BeliefNode, q: Optional[dict] = None) -> int:
        """Store min-over-surviving-actions of both bounds; return argmin Q_L."""
        if q is None:
            q = self.all_q(node)
        best, vlo, vhi = -1, np.inf, np.inf
        for a in node.actions:
            lo, hi = q[a]
            if lo < vlo:
                best, vlo = a, lo
            if hi < vhi:
                vhi = hi
        self.table.set_bounds(node.belief, (vlo, vhi))
        self.backups += 1
        return best

    def prune_actions(self, node: BeliefNode, a_best: int, alpha: float,
                      q: Optional[dict] = None) -> None:
        if q is None:
            q = self.all_q(node)
        qb = q[a_best]
        node.actions = [a for a in node.actions
                        if a == a_best or not dominance_probability(qb, q[a]) > alpha]

    def pick_next_belief(self, node: BeliefNode, a: int, trial_root_gap: float, tau: float,
                         rng: np.random.Generator) -> Optional[Belief]:
        """Sample a successor proportionally to Pr(o|b,a) * gap, or None to stop."""
        e = self.expansion(node, a)
        g = [p * (h - l) for p, (l, h) in zip(e.probs, self.successor_bounds(e))]
        G = sum(g)
        if G <= 0.0 or G < trial_root_gap / tau:
            return None
        if len(g) == 1:
            return e.belief(0)
        u = rng.random() * G
        acc = 0.0
        for i, gi in enumerate(g):
            acc += gi
            if u < acc and gi > 0:
                return e.belief(i)
        # rounding: last positive entry
        return e.belief(max(i for i, gi in enumerate(g) if gi > 0))


def q_bounds(node: BeliefNode, a: int, t: BoundedValueTable, m: GoalPomdp) -> QInterval:
    return BeliefGraph(m, t).q_bounds(node, a)


def bellman_backup(node: BeliefNode, t: BoundedValueTable, m: GoalPomdp) -> int:
    return BeliefGraph(m, t).bellman_backup(node)


def prune_actions(node: BeliefNode, a_best: int, alpha: float, t: BoundedValueTable,
                  m: GoalPomdp) -> None:
    BeliefGraph(m, t).prune_actions(node, a_best, alpha)


def pick_next_belief(node: BeliefNode, a: int, trial_root_gap: float, tau: float,
                     t: BoundedValueTable, m: GoalPomdp, rng: np.random.Generator):
    return BeliefGraph(m, t).pick_next_belief(node, a, trial_root_gap, tau, rng)
