import io
import itertools

import numpy as np
import pytest

from b3rtdp.domains import make_tiger, random_pomdp
from b3rtdp.heuristics import blind_upper_bound, solve_qmdp
from b3rtdp.model import Belief, ModelError, transform_to_goal_pomdp
from b3rtdp.solver import B3RTDP, Policy, SolverParams, policy_action, run_trial, solve

from builders import chain_to_goal, goal_model, random_belief
from oracles import expectimax_bracket


@pytest.fixture(scope="module")
def tiger():
    m = transform_to_goal_pomdp(make_tiger())
    return m, solve_qmdp(m), blind_upper_bound(m)


def fake_clock(step=0.001):
    c = itertools.count()
    return lambda: next(c) * step


def test_params_validation():
    for bad in (dict(D=0), dict(alpha=0.5), dict(alpha=1.01), dict(epsilon=0), dict(beta=-1),
                dict(tau=1.0), dict(max_depth=0)):
        with pytest.raises(ModelError):
            SolverParams(**bad)
    SolverParams(alpha=1.0)


def test_trial_stops_when_successors_known():
    m = chain_to_goal(1.0, discount=0.9)
    s = B3RTDP(m, SolverParams())
    assert run_trial(m.initial_belief, s) == 1
    assert s.table.get_bounds(m.initial_belief) == (1.0, 1.0)


def test_trial_depth_cap(tiger):
    m, lo, hi = tiger
    s = B3RTDP(m, SolverParams(max_depth=3), lower=lo, upper=hi)
    for _ in range(20):
        assert run_trial(m.initial_belief, s) <= 3


def test_trial_never_descends_into_known_beliefs(tiger):
    m, lo, hi = tiger
    s = B3RTDP(m, SolverParams(D=20, seed=4), lower=lo, upper=hi)
    pick = s.graph.pick_next_belief
    seen = []

    def checked(*args, **kw):
        b = pick(*args, **kw)
        if b is not None:
            seen.append(s.table.gap(b))
        return b

    s.graph.pick_next_belief = checked
    s.run()
    assert seen and min(seen) > 0


@pytest.mark.parametrize("seed", range(100))
def test_tiger_root_gap_monotone(tiger, seed):
    m, lo, hi = tiger
    s = B3RTDP(m, SolverParams(D=20, alpha=0.95, seed=seed), lower=lo, upper=hi)
    gaps = [s.table.gap(m.initial_belief)]
    while s.step():
        gaps.append(s.table.gap(m.initial_belief))
    assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    assert s.stats.converged


def test_goal_root_needs_no_trials():
    T = np.array([[[1.0, 0.0], [1.0, 0.0]]])
    m = goal_model(T, np.ones((1, 2, 1)), [[0.0], [1.0]], [0], [1, 0], discount=0.9)
    s = B3RTDP(m)
    stats = s.run()
    assert stats.trials == 0 and stats.converged


def test_tiger_listens_at_uniform(tiger):
    m, lo, hi = tiger
    p = solve(m, SolverParams(D=20, alpha=0.95), lower=lo, upper=hi)
    assert m.actions[policy_action(p, m.initial_belief)] == "listen"


def test_unvisited_belief_uses_heuristic(tiger):
    m, lo, hi = tiger
    p = solve(m, SolverParams(D=20), lower=lo, upper=hi)
    b = Belief([0, 1], [0.999, 0.001])
    assert b not in p.action_sets
    assert m.actions[p.action(b)] == "open-right"


def test_single_surviving_action_is_returned(tiger):
    m, lo, hi = tiger
    s = B3RTDP(m, SolverParams(D=20), lower=lo, upper=hi)
    s.run()
    p = s.policy()
    for b, acts in p.action_sets.items():
        if len(acts) == 1:
            assert p.action(b) == acts[0]


def test_bit_reproducible(tiger):
    m, lo, hi = tiger
    runs = []
    for _ in range(2):
        s = B3RTDP(m, SolverParams(D=20, seed=9), lower=lo, upper=hi, clock=fake_clock())
        s.run()
        buf = io.StringIO()
        s.policy().dump(buf)
        runs.append((s.log, len(s.table), buf.getvalue()))
    assert runs[0] == runs[1]


def test_policy_dump_load(tiger):
    m, lo, hi = tiger
    s = B3RTDP(m, SolverParams(D=20, alpha=0.65), lower=lo, upper=hi)
    s.run()
    p = s.policy()
    buf = io.StringIO()
    p.dump(buf)
    buf.seek(0)
    q = Policy.load(buf, m, lo, hi)
    assert q.params == p.params and q.stats == p.stats
    assert q.table.table == p.table.table and len(q.action_sets) == len(p.action_sets)
    rng = np.random.default_rng(0)
    beliefs = list(p.action_sets) + [Belief.from_dense(random_belief(rng, 2)) for _ in range(20)]
    assert [p.action(b) for b in beliefs] == [q.action(b) for b in beliefs]


def test_time_limit_marks_timeout(tiger):
    m, lo, hi = tiger
    # each trial reads the clock twice, so one trial spends one tick
    s = B3RTDP(m, SolverParams(D=20, time_limit=0.0005), lower=lo, upper=hi, clock=fake_clock())
    stats = s.run()
    assert stats.timed_out and stats.trials == 1 and not stats.converged


def test_progress_records(tiger):
    m, lo, hi = tiger
    recs = []
    s = B3RTDP(m, SolverParams(D=20), lower=lo, upper=hi, progress=recs.append)
    s.run()
    assert recs == s.log and [r["trial"] for r in recs] == list(range(1, len(recs) + 1))
    assert set(recs[0]) == {"trial", "elapsed_ms", "root_lower", "root_upper", "table_size",
                            "frontier_total", "frontier_size"}
    assert all(b["frontier_total"] <= a["frontier_total"] + 1e-12 for a, b in zip(recs, recs[1:]))


@pytest.mark.parametrize("seed", range(8))
def test_root_bounds_bracket_oracle(seed):
    D, eps = 100, 0.01
    rng = np.random.default_rng(seed)
    m = transform_to_goal_pomdp(random_pomdp(rng, 5, 2, 2, discount=0.3))
    lo, hi = solve_qmdp(m, tolerance=1e-10), blind_upper_bound(m)
    s = B3RTDP(m, SolverParams(D=D, epsilon=eps, seed=seed), lower=lo, upper=hi)
    assert s.run().converged
    v_lo, v_hi = s.table.get_bounds(m.initial_belief)
    o_lo, o_hi = expectimax_bracket(m, m.initial_belief.to_dense(m.n_states), 9, hi.values)
    # an alias class spans L1 distance <= |S|/D; a value bound U gives a
    # per-backup error <= U |S| / (2D), accumulated over a geometric horizon
    U = hi.values.max()
    slack = U * m.n_states / (2 * D) / (1 - m.discount)
    assert v_lo <= o_hi + eps + slack
    assert v_hi >= o_lo - eps - slack
