"""Tabular POMDP models, sparse beliefs and exact belief arithmetic.

Two model flavours are provided. ``DiscountedPomdp`` is the usual
reward-maximising, discounted model. ``GoalPomdp`` is its cost-minimising
counterpart with an absorbing goal state; the discount is folded into the
transitions as a ``1 - gamma`` per-step chance of reaching the goal.

Transitions and observations are stored per action as CSR matrices, so the
belief update only ever touches the rows in the belief's support.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from ._kernels import successor_arrays

ROW_TOL = 1e-9
# entries of an updated belief below this are dropped (float dust)
PRUNE_TOL = 1e-12
# exact-belief identity resolution
IDENTITY_SCALE = 1e9


class ModelError(ValueError):
    """Invalid model, identifier or belief."""


class Belief:
    """Immutable sparse distribution over state ids.

    Only strictly positive entries are stored, sorted by state id. Two beliefs
    compare equal when they have the same support and their probabilities
    agree on a 1e-9 grid.
    """

    __slots__ = ("states", "probs", "_ident", "_hash", "_dkeys")

    def __init__(self, states, probs, *, check: bool = True):
        states = np.asarray(states, dtype=np.int64)
        probs = np.asarray(probs, dtype=np.float64)
        if check:
            if states.shape != probs.shape or states.ndim != 1:
                raise ModelError("belief states/probs must be equal-length vectors")
            if states.size == 0:
                raise ModelError("empty belief")
            if np.any(probs <= 0):
                raise ModelError("belief entries must be strictly positive")
            if abs(probs.sum() - 1.0) > ROW_TOL:
                raise ModelError(f"belief sums to {float(probs.sum())!r}, not 1")
            if np.any(np.diff(states) <= 0):
                order = np.argsort(states, kind="stable")
                states, probs = states[order], probs[order]
                if np.any(np.diff(states) == 0):
                    raise ModelError("duplicate state in belief")
        states.flags.writeable = False
        probs.flags.writeable = False
        self.states = states
        self.probs = probs
        self._ident = None
        self._hash = None
        self._dkeys = None

    @classmethod
    def point(cls, s: int) -> "Belief":
        return cls(np.array([s]), np.array([1.0]), check=False)

    @classmethod
    def from_dense(cls, vec) -> "Belief":
        vec = np.asarray(vec, dtype=np.float64)
        idx = np.flatnonzero(vec > 0)
        return cls(idx, vec[idx])

    @classmethod
    def from_dict(cls, entries: dict) -> "Belief":
        items = sorted((int(s), float(p)) for s, p in entries.items() if p > 0)
        return cls([s for s, _ in items], [p for _, p in items])

    def to_dense(self, n_states: int) -> np.ndarray:
        out = np.zeros(n_states)
        out[self.states] = self.probs
        return out

    def to_dict(self) -> dict:
        return dict(zip(self.states.tolist(), self.probs.tolist()))

    def __len__(self):
        return self.states.size

    def __getitem__(self, s):
        i = np.searchsorted(self.states, s)
        if i < self.states.size and self.states[i] == s:
            return float(self.probs[i])
        return 0.0

    @property
    def identity(self) -> bytes:
        if self._ident is None:
            grid = np.rint(self.probs * IDENTITY_SCALE).astype(np.int64)
            self._ident = self.states.tobytes() + b"|" + grid.tobytes()
        return self._ident

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.identity)
        return self._hash

    def __eq__(self, other):
        if not isinstance(other, Belief):
            return NotImplemented
        return self.identity == other.identity

    def __repr__(self):
        body = ", ".join(f"{s}: {p:.4g}" for s, p in zip(self.states[:6], self.probs[:6]))
        more = ", ..." if self.states.size > 6 else ""
        return f"Belief({{{body}{more}}})"


class Successor(NamedTuple):
    observation: int
    probability: float
    belief: Belief


class SimStep(NamedTuple):
    next_state: int
    observation: int
    cost: float
    is_goal: bool


def _as_csr_list(mats, shape) -> tuple:
    out = []
    for m in mats:
        m = sp.csr_matrix(m, dtype=np.float64, shape=shape)
        m.eliminate_zeros()
        m.sort_indices()
        out.append(m)
    return tuple(out)


def _normalize_rows(m: sp.csr_matrix) -> sp.csr_matrix:
    sums = np.asarray(m.sum(axis=1)).ravel()
    m = m.copy()
    m.data /= np.repeat(sums, np.diff(m.indptr))
    return m


def _check_rows(mats, what: str, names_row, names_col=None):
    for a, m in enumerate(mats):
        sums = np.asarray(m.sum(axis=1)).ravel()
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOL)
        if bad.size:
            r = int(bad[0])
            raise ModelError(
                f"{what} row (action={names_row[0][a]}, state={names_row[1][r]}) "
                f"sums to {float(sums[r])!r}"
            )
        if m.nnz and m.data.min() < 0:
            raise ModelError(f"{what} has negative entries for action {names_row[0][a]}")


@dataclass(frozen=True, eq=False)
class TabularPomdp:
    """Shared tabular structure; see ``DiscountedPomdp`` and ``GoalPomdp``."""

    states: tuple
    actions: tuple
    observations: tuple
    transition: tuple  # per action: CSR (S, S)
    observation_fn: tuple  # per action: CSR (S', O)
    initial_belief: Belief

    def __post_init__(self):
        S, A, O = len(self.states), len(self.actions), len(self.observations)
        if min(S, A, O) < 1:
            raise ModelError("model needs at least one state, action and observation")
        if len(self.transition) != A or len(self.observation_fn) != A:
            raise ModelError("one transition and observation matrix per action required")
        object.__setattr__(self, "transition", _as_csr_list(self.transition, (S, S)))
        object.__setattr__(self, "observation_fn", _as_csr_list(self.observation_fn, (S, O)))
        _check_rows(self.transition, "T", (self.actions, self.states))
        _check_rows(self.observation_fn, "O", (self.actions, self.states))
        # rows pass at 1e-9; rescale so successor masses sum to 1 to rounding
        object.__setattr__(self, "transition", tuple(map(_normalize_rows, self.transition)))
        object.__setattr__(self, "observation_fn", tuple(map(_normalize_rows, self.observation_fn)))
        b = self.initial_belief
        if not isinstance(b, Belief):
            raise ModelError("initial_belief must be a Belief")
        if b.states.max() >= S:
            raise ModelError("initial belief refers to unknown states")

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def n_observations(self) -> int:
        return len(self.observations)

    def _check_ids(self, a=None, o=None, s=None):
        if a is not None and not 0 <= a < self.n_actions:
            raise ModelError(f"invalid action id {a}")
        if o is not None and not 0 <= o < self.n_observations:
            raise ModelError(f"invalid observation id {o}")
        if s is not None and not 0 <= s < self.n_states:
            raise ModelError(f"invalid state id {s}")

    def dense_transition(self) -> np.ndarray:
        """T as a dense (A, S, S) array. Only for small models."""
        return np.stack([m.toarray() for m in self.transition])

    def dense_observation(self) -> np.ndarray:
        """Omega as a dense (A, S', O) array. Only for small models."""
        return np.stack([m.toarray() for m in self.observation_fn])

    # -- belief arithmetic -------------------------------------------------

    @cached_property
    def kernel_args(self) -> list:
        """Per action, the CSR arrays of T and Omega in kernel argument order."""
        return [(T.indptr, T.indices, T.data, Om.indptr, Om.indices, Om.data)
                for T, Om in zip(self.transition, self.observation_fn)]

    def successor_arrays(self, b: Belief, a: int):
        """Flat form of ``successors``: (obs, pr, offsets, states, probs)."""
        return successor_arrays(*self.kernel_args[a], b.states, b.probs, self.n_states, PRUNE_TOL)

    def successors(self, b: Belief, a: int) -> list:
        """All (o, Pr(o|b,a), b_a^o) with Pr(o|b,a) > 0, ordered by o."""
        self._check_ids(a=a)
        obs, pr, off, st, pp = self.successor_arrays(b, a)
        return [Successor(int(obs[g]), float(pr[g]),
                          Belief(st[off[g]:off[g + 1]], pp[off[g]:off[g + 1]], check=False))
                for g in range(obs.size)]

    def check_belief(self, b: Belief):
        if b.states[-1] >= self.n_states:
            raise ModelError("belief refers to unknown states")


@dataclass(frozen=True, eq=False)
class DiscountedPomdp(TabularPomdp):
    reward: np.ndarray = None  # (S, A)
    discount: float = 0.95

    def __post_init__(self):
        super().__post_init__()
        R = np.asarray(self.reward, dtype=np.float64)
        if R.shape != (self.n_states, self.n_actions):
            raise ModelError(f"reward must have shape (S, A), got {R.shape}")
        R.flags.writeable = False
        object.__setattr__(self, "reward", R)
        if not 0 < self.discount < 1:
            raise ModelError(f"discount must lie in (0, 1), got {self.discount}")

    @cached_property
    def terminal_states(self) -> frozenset:
        """States that are absorbing under every action with zero reward."""
        out = []
        for s in range(self.n_states):
            if np.any(self.reward[s] != 0):
                continue
            if all(T[s, s] == 1.0 for T in self.transition):
                out.append(s)
        return frozenset(out)


@dataclass(frozen=True, eq=False)
class GoalPomdp(TabularPomdp):
    cost: np.ndarray = None  # (S, A), non-negative
    goal_states: frozenset = frozenset()
    reward_offset: float = 0.0
    # gamma of the source discounted model, when known
    discount: Optional[float] = None
    is_goal: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        super().__post_init__()
        C = np.asarray(self.cost, dtype=np.float64)
        if C.shape != (self.n_states, self.n_actions):
            raise ModelError(f"cost must have shape (S, A), got {C.shape}")
        if np.any(C < 0):
            raise ModelError("goal POMDP costs must be non-negative")
        C.flags.writeable = False
        object.__setattr__(self, "cost", C)
        goals = frozenset(int(g) for g in self.goal_states)
        object.__setattr__(self, "goal_states", goals)
        flag = np.zeros(self.n_states, dtype=bool)
        for g in goals:
            if np.any(C[g] != 0):
                raise ModelError(f"goal state {g} has nonzero cost")
            if any(T[g, g] != 1.0 for T in self.transition):
                raise ModelError(f"goal state {g} is not absorbing")
            flag[g] = True
        flag.flags.writeable = False
        object.__setattr__(self, "is_goal", flag)
        if self.discount is not None and not 0 < self.discount < 1:
            raise ModelError(f"discount metadata must lie in (0, 1), got {self.discount}")

    def is_goal_belief(self, b: Belief) -> bool:
        return bool(self.is_goal[b.states].all())

    def expected_cost(self, b: Belief) -> np.ndarray:
        """sum_s b(s) C(s, .) for every action."""
        return b.probs @ self.cost[b.states]


# -- module level operations ------------------------------------------------


def observation_probability(b: Belief, a: int, o: int, m: TabularPomdp) -> float:
    """Pr(o | b, a)."""
    m._check_ids(a=a, o=o)
    m.check_belief(b)
    obs, pr, _, _, _ = m.successor_arrays(b, a)
    hit = np.flatnonzero(obs == o)
    return float(pr[hit[0]]) if hit.size else 0.0


def belief_update(b: Belief, a: int, o: int, m: TabularPomdp) -> Optional[Belief]:
    """Bayes update b_a^o; returns None when o is impossible under (b, a)."""
    m._check_ids(a=a, o=o)
    m.check_belief(b)
    for succ in m.successors(b, a):
        if succ.observation == o:
            return succ.belief
    return None


def transform_to_goal_pomdp(m: DiscountedPomdp) -> GoalPomdp:
    """Goal-POMDP form of a discounted model.

    One absorbing, fully observable goal state (with its own observation) is
    appended. Every transition row is scaled by gamma and the remaining
    1 - gamma is sent to the goal. Costs are ``R_max - R`` so that, for every
    policy, goal cost = ``R_max / (1 - gamma)`` - discounted reward.
    """
    gamma = m.discount
    if not 0 < gamma < 1:
        raise ModelError(f"discount must lie in (0, 1), got {gamma}")
    S, O = m.n_states, m.n_observations
    g, og = S, O
    r_max = float(m.reward.max())
    to_goal = sp.csr_matrix(np.full((S, 1), 1.0 - gamma))
    goal_row_T = sp.csr_matrix(([1.0], ([0], [g])), shape=(1, S + 1))
    goal_row_O = sp.csr_matrix(([1.0], ([0], [og])), shape=(1, O + 1))
    trans, obs = [], []
    for T, Om in zip(m.transition, m.observation_fn):
        trans.append(sp.vstack([sp.hstack([T * gamma, to_goal]), goal_row_T], format="csr"))
        obs.append(sp.vstack([sp.hstack([Om, sp.csr_matrix((S, 1))]), goal_row_O], format="csr"))
    cost = np.vstack([r_max - m.reward, np.zeros((1, m.n_actions))])
    cost[cost < 0] = 0.0  # -0.0 and float noise
    return GoalPomdp(
        states=tuple(m.states) + ("__goal__",),
        actions=tuple(m.actions),
        observations=tuple(m.observations) + ("__goal__",),
        transition=tuple(trans),
        observation_fn=tuple(obs),
        initial_belief=m.initial_belief,
        cost=cost,
        goal_states=frozenset([g]),
        reward_offset=r_max / (1.0 - gamma),
        discount=gamma,
    )


def _sample_row(mat: sp.csr_matrix, row: int, rng: np.random.Generator) -> int:
    lo, hi = mat.indptr[row], mat.indptr[row + 1]
    if hi - lo == 1:
        return int(mat.indices[lo])
    cdf = np.cumsum(mat.data[lo:hi])
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return int(mat.indices[lo + min(i, hi - lo - 1)])


def sample_state(b: Belief, rng: np.random.Generator) -> int:
    if b.states.size == 1:
        return int(b.states[0])
    cdf = np.cumsum(b.probs)
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return int(b.states[min(i, b.states.size - 1)])


def sample_successor(s: int, a: int, m: TabularPomdp, rng: np.random.Generator) -> SimStep:
    """Draw s' ~ T(s, a, .) then o ~ Omega(a, s', .).

    ``cost`` is C(s, a) on a goal model and -R(s, a) on a discounted one.
    """
    m._check_ids(a=a, s=s)
    s2 = _sample_row(m.transition[a], s, rng)
    o = _sample_row(m.observation_fn[a], s2, rng)
    if isinstance(m, GoalPomdp):
        return SimStep(s2, o, float(m.cost[s, a]), bool(m.is_goal[s2]))
    return SimStep(s2, o, -float(m.reward[s, a]), False)


def model_checksum(m: TabularPomdp) -> str:
    """Stable sha256 over the model's tables."""
    import hashlib

    h = hashlib.sha256()
    h.update(f"{m.n_states},{m.n_actions},{m.n_observations}".encode())
    for mats in (m.transition, m.observation_fn):
        for M in mats:
            for arr in (M.indptr, M.indices):
                h.update(np.ascontiguousarray(arr, dtype=np.int64).tobytes())
            h.update(np.ascontiguousarray(M.data, dtype=np.float64).tobytes())
    table = m.cost if isinstance(m, GoalPomdp) else m.reward
    h.update(np.ascontiguousarray(table).tobytes())
    h.update(m.initial_belief.states.tobytes() + m.initial_belief.probs.tobytes())
    return h.hexdigest()


def dense_model(
    T: np.ndarray,
    Z: np.ndarray,
    R: np.ndarray,
    discount: float,
    b0: Sequence[float],
    names: Optional[tuple] = None,
) -> DiscountedPomdp:
    """Build a ``DiscountedPomdp`` from dense (A,S,S), (A,S,O) and (S,A) arrays."""
    A, S, _ = T.shape
    O = Z.shape[2]
    if names is None:
        names = (tuple(f"s{i}" for i in range(S)), tuple(f"a{i}" for i in range(A)),
                 tuple(f"o{i}" for i in range(O)))
    return DiscountedPomdp(
        states=names[0], actions=names[1], observations=names[2],
        transition=tuple(sp.csr_matrix(T[a]) for a in range(A)),
        observation_fn=tuple(sp.csr_matrix(Z[a]) for a in range(A)),
        initial_belief=Belief.from_dense(b0),
        reward=R, discount=discount,
    )
