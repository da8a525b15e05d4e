"""The convergence frontier: a weighted set of beliefs that replaces the root
once the action choice near the root has settled."""
from __future__ import annotations

import math

import numpy as np

from .model import Belief
from .search import BeliefGraph
from .value_store import BoundedValueTable

CONSERVATION_TOL = 1e-12


class FrontierError(RuntimeError):
    pass


class ConvergenceFrontier:
    """Map of exact beliefs to reach probabilities.

    With ``check=True`` every update asserts that the total never grows and
    that each expansion moves its member's weight to the successors intact.
    """

    def __init__(self, root: Belief = None, check: bool = False):
        self.members: dict = {}
        self.check = check
        self.expansions = 0
        self.removals = 0
        if root is not None:
            self.members[root] = 1.0

    def __len__(self):
        return len(self.members)

    def __contains__(self, b):
        return b in self.members

    @property
    def total(self) -> float:
        return math.fsum(self.members.values())

    def weighted_gap(self, t: BoundedValueTable) -> float:
        return float(sum(w * t.gap(b) for b, w in self.members.items()))


def update_frontier(c: ConvergenceFrontier, params, t: BoundedValueTable, graph: BeliefGraph) -> None:
    """Drop members whose value is known; expand members with one action left."""
    before_total = c.total if c.check else 0.0
    # snapshot of members; weights are read live since merges may grow them
    for b in list(c.members):
        w = c.members[b]
        if t.gap(b) < params.epsilon:
            del c.members[b]
            c.removals += 1
            continue
        node = graph.nodes.get(b)
        if node is None or len(node.actions) != 1:
            continue
        a = node.actions[0]
        e = graph.expansion(node, a)
        # remove first so a successor equal to b keeps its share
        del c.members[b]
        before = c.total if c.check else 0.0
        for p, b2 in zip(e.probs, e.beliefs):
            if p > 0:
                c.members[b2] = c.members.get(b2, 0.0) + w * p
        c.expansions += 1
        if c.check:
            moved = c.total - before
            if abs(moved - w) > CONSERVATION_TOL:
                raise FrontierError(f"expansion moved {moved!r} of weight {w!r}")
    if c.check and c.total > before_total + CONSERVATION_TOL:
        raise FrontierError(f"frontier total grew from {before_total!r} to {c.total!r}")


def frontier_terminated(c: ConvergenceFrontier, params, t: BoundedValueTable) -> bool:
    return c.total < params.beta or c.weighted_gap(t) < params.epsilon


def sample_frontier(c: ConvergenceFrontier, t: BoundedValueTable, rng: np.random.Generator) -> Belief:
    """Pick a member with probability proportional to weight * gap."""
    members = list(c.members.items())
    g = [w * t.gap(b) for b, w in members]
    G = sum(g)
    if not G > 0:
        raise FrontierError("sample_frontier called on a frontier with no weighted gap")
    u = rng.random() * G
    acc = 0.0
    for (b, _), gi in zip(members, g):
        acc += gi
        if u < acc and gi > 0:
            return b
    return next(b for (b, _), gi in zip(reversed(members), reversed(g)) if gi > 0)
