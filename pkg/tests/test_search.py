import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from b3rtdp.domains import random_pomdp
from b3rtdp.heuristics import StateHeuristic, blind_upper_bound, solve_qmdp
from b3rtdp.model import Belief, transform_to_goal_pomdp
from b3rtdp.search import (BeliefGraph, BeliefNode, QInterval, bellman_backup, dominance_probability,
                           pick_next_belief, prune_actions, q_bounds)
from b3rtdp.value_store import BoundedValueTable

from builders import chain_to_goal, goal_model, random_belief
from oracles import dense_arrays, dense_q, mc_dominance


def two_branch(c0, c1, hi1, hi2, lo1=0.0, lo2=0.0):
    """s0 --a0 (cost c0)--> s1, s0 --a1 (cost c1)--> s2; s1, s2 --> goal s3."""
    T = np.zeros((2, 4, 4))
    T[0, 0, 1] = T[1, 0, 2] = 1
    T[:, 1:, 3] = 1
    Z = np.zeros((2, 4, 4))
    Z[:, np.arange(4), np.arange(4)] = 1
    C = np.zeros((4, 2))
    C[0] = (c0, c1)
    m = goal_model(T, Z, C, [3], [1, 0, 0, 0])
    t = BoundedValueTable(10, StateHeuristic(np.array([0, lo1, lo2, 0.0]), "lower"),
                          StateHeuristic(np.array([100, hi1, hi2, 0.0]), "upper"))
    return m, t


# -- q_bounds ------------------------------------------------------------------

def test_q_all_goal_successors():
    m = chain_to_goal(2.5, discount=0.9)
    t = BoundedValueTable(10, solve_qmdp(m), blind_upper_bound(m))
    assert q_bounds(BeliefNode(Belief.point(0), m), 0, t, m) == (2.5, 2.5)


def test_q_single_successor():
    m, t = two_branch(1.0, 0.0, 40.0, 0.0, lo1=2.0)
    assert q_bounds(BeliefNode(Belief.point(0), m), 0, t, m) == (3.0, 41.0)


@pytest.mark.parametrize("seed", range(10))
def test_q_matches_dense(seed):
    rng = np.random.default_rng(seed)
    m = transform_to_goal_pomdp(random_pomdp(rng, 4, 3, 3, discount=0.9))
    T, Z = dense_arrays(m)
    t = BoundedValueTable(10, solve_qmdp(m), blind_upper_bound(m))
    b = random_belief(rng, m.n_states)
    B = Belief.from_dense(b)
    # store records on some successors so both branches of get_bounds are used
    for a in range(m.n_actions):
        for s in m.successors(B, a):
            if rng.random() < 0.5:
                lo, hi = t.get_bounds(s.belief)
                t.set_bounds(s.belief, (lo + 0.5 * (hi - lo) * rng.random(), hi))
    node = BeliefNode(B, m)
    for a in range(m.n_actions):
        q = q_bounds(node, a, t, m)
        for k in (0, 1):
            ref = dense_q(T, Z, m.cost, b, a, lambda d: t.get_bounds(Belief.from_dense(d))[k])
            assert q[k] == pytest.approx(ref, abs=1e-9)
        assert q.q_lower <= q.q_upper


# -- bellman_backup ------------------------------------------------------------

def test_backup_min_per_bound():
    m, t = two_branch(1.0, 3.0, 4.0, 1.0)
    node = BeliefNode(Belief.point(0), m)
    g = BeliefGraph(m, t)
    assert g.all_q(node) == {0: (1.0, 5.0), 1: (3.0, 4.0)}
    assert bellman_backup(node, t, m) == 0
    assert t.get_bounds(node.belief) == (1.0, 4.0)


def test_backup_single_surviving_action():
    m, t = two_branch(1.0, 3.0, 4.0, 1.0)
    node = BeliefNode(Belief.point(0), m)
    node.actions = [1]
    assert bellman_backup(node, t, m) == 1
    assert t.get_bounds(node.belief) == (3.0, 4.0)


def test_backup_ties_to_lowest_id():
    m, t = two_branch(2.0, 2.0, 1.0, 1.0)
    assert bellman_backup(BeliefNode(Belief.point(0), m), t, m) == 0


def test_backup_idempotent():
    rng = np.random.default_rng(3)
    m = transform_to_goal_pomdp(random_pomdp(rng, 5, 3, 2, discount=0.9))
    t = BoundedValueTable(10, solve_qmdp(m), blind_upper_bound(m))
    g = BeliefGraph(m, t)
    node = g.node(m.initial_belief)
    a1 = g.bellman_backup(node)
    first = t.get_bounds(node.belief)
    a2 = g.bellman_backup(node)
    assert a1 == a2 and t.get_bounds(node.belief) == first


# -- dominance -----------------------------------------------------------------

@pytest.mark.parametrize("qa, qb, p", [
    ((0, 1), (2, 3), 1.0),
    ((2, 3), (0, 1), 0.0),
    ((0, 1), (0, 1), 0.5),
    ((0, 2), (1, 3), 0.875),
    ((0, 4), (1, 2), 0.375),
    ((1, 1), (1, 1), 0.5),
    ((1, 1), (0, 2), 0.5),
    ((0, 2), (1, 1), 0.5),
    ((0, 2), (0.5, 0.5), 0.25),
])
def test_dominance_worked_cases(qa, qb, p):
    assert dominance_probability(QInterval(*qa), QInterval(*qb)) == pytest.approx(p, abs=1e-15)


def test_dominance_analytic_double_integral():
    # Pr(X < Y), X ~ U(0,2), Y ~ U(1,3): 1 - Pr(X >= Y) = 1 - (1/4) * int_1^2 (x - 1) dx
    assert dominance_probability((0, 2), (1, 3)) == pytest.approx(1 - 0.25 * 0.5)


interval = st.tuples(st.floats(-50, 50), st.floats(0, 30)).map(lambda t: QInterval(t[0], t[0] + t[1]))


@settings(max_examples=500, deadline=None)
@given(qa=interval, qb=interval)
def test_dominance_complement(qa, qb):
    p = dominance_probability(qa, qb)
    assert 0.0 <= p <= 1.0
    assert p + dominance_probability(qb, qa) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(qa=interval, shift=st.floats(0, 20))
def test_dominance_monotone_in_shift(qa, shift):
    # moving the rival interval up can only make a more likely to be cheaper
    qb = QInterval(qa.q_lower + 1.0, qa.q_upper + 2.0)
    moved = QInterval(qb.q_lower + shift, qb.q_upper + shift)
    assert dominance_probability(qa, moved) >= dominance_probability(qa, qb) - 1e-12


@pytest.mark.parametrize("seed", range(20))
def test_dominance_matches_monte_carlo(seed):
    rng = np.random.default_rng(seed)
    la, lb = rng.uniform(0, 10, 2)
    qa = QInterval(la, la + rng.uniform(0, 5))
    qb = QInterval(lb, lb + rng.uniform(0, 5))
    assert dominance_probability(qa, qb) == pytest.approx(mc_dominance(qa, qb, 400_000, seed), abs=4e-3)


# -- prune_actions ----------------------------------------------------------------

def overlap_node():
    # Q(a0) = (0, 2), Q(a1) = (1, 3): a0 dominates with probability 0.875
    m, t = two_branch(0.0, 1.0, 2.0, 2.0)
    return m, t, BeliefNode(Belief.point(0), m)


def test_prune_threshold():
    m, t, node = overlap_node()
    prune_actions(node, 0, 0.95, t, m)
    assert node.actions == [0, 1]
    prune_actions(node, 0, 0.65, t, m)
    assert node.actions == [0]


def test_prune_keeps_best_with_identical_interval():
    m, t = two_branch(1.0, 1.0, 2.0, 2.0)
    node = BeliefNode(Belief.point(0), m)
    prune_actions(node, 1, 0.51, t, m)
    assert 1 in node.actions


def test_prune_alpha_one_is_strict():
    # point intervals (0, 0) vs (1, 1): dominance exactly 1, never > 1
    m, t = two_branch(0.0, 1.0, 0.0, 0.0)
    node = BeliefNode(Belief.point(0), m)
    prune_actions(node, 0, 1.0, t, m)
    assert node.actions == [0, 1]
    prune_actions(node, 0, 0.99, t, m)
    assert node.actions == [0]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), alpha=st.floats(0.51, 1.0))
def test_prune_never_empties(seed, alpha):
    rng = np.random.default_rng(seed)
    m = transform_to_goal_pomdp(random_pomdp(rng, 4, 4, 2, discount=0.9))
    t = BoundedValueTable(10, solve_qmdp(m), blind_upper_bound(m))
    g = BeliefGraph(m, t)
    node = g.node(m.initial_belief)
    q = g.all_q(node)
    best = min(node.actions, key=lambda a: (q[a][0], a))
    g.prune_actions(node, best, alpha, q)
    assert best in node.actions and len(node.actions) >= 1


# -- pick_next_belief ----------------------------------------------------------------

def fork_model(gap1, gap2, p1=0.5):
    """One action from s0 reaches s1 or s2 (observed), with the given gaps."""
    T = np.zeros((1, 4, 4))
    T[0, 0, 1], T[0, 0, 2] = p1, 1 - p1
    T[0, 1:, 3] = 1
    Z = np.zeros((1, 4, 4))
    Z[0, np.arange(4), np.arange(4)] = 1
    m = goal_model(T, Z, np.zeros((4, 1)), [3], [1, 0, 0, 0])
    t = BoundedValueTable(10, StateHeuristic(np.zeros(4), "lower"),
                          StateHeuristic(np.array([1.0, gap1, gap2, 0.0]), "upper"))
    return m, t


def test_pick_terminates_on_zero_gaps():
    m, t = fork_model(0.0, 0.0)
    rng = np.random.default_rng(0)
    assert pick_next_belief(BeliefNode(Belief.point(0), m), 0, 0.0, 10.0, t, m, rng) is None


def test_pick_terminates_below_threshold():
    m, t = fork_model(0.6, 0.2)  # G = 0.4
    rng = np.random.default_rng(0)
    node = BeliefNode(Belief.point(0), m)
    assert pick_next_belief(node, 0, 4.1, 10.0, t, m, rng) is None
    assert pick_next_belief(node, 0, 3.9, 10.0, t, m, rng) is not None


def test_pick_single_positive_successor():
    m, t = fork_model(0.6, 0.0)
    rng = np.random.default_rng(0)
    node = BeliefNode(Belief.point(0), m)
    assert all(pick_next_belief(node, 0, 0.0, 10.0, t, m, rng) == Belief.point(1) for _ in range(200))


def test_pick_frequencies():
    m, t = fork_model(0.6, 0.2)  # g = (0.3, 0.1)
    g = BeliefGraph(m, t)
    node = g.node(Belief.point(0))
    rng = np.random.default_rng(5)
    n = 10_000
    hits = sum(g.pick_next_belief(node, 0, 0.0, 10.0, rng) == Belief.point(1) for _ in range(n))
    assert abs(hits - 0.75 * n) < 3 * np.sqrt(n * 0.75 * 0.25)


def test_expansion_cache_evicts_oldest():
    rng = np.random.default_rng(0)
    m = transform_to_goal_pomdp(random_pomdp(rng, 5, 3, 2, discount=0.9))
    t = BoundedValueTable(10, solve_qmdp(m), blind_upper_bound(m))
    g = BeliefGraph(m, t, max_expansions=2)
    node = g.node(m.initial_belief)
    q_before = g.all_q(node)
    assert len(node.expansions) == 2 and 0 not in node.expansions
    assert g.all_q(node) == q_before
