"""Admissible state-level value bounds in cost space and their lifting to beliefs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Belief, GoalPomdp, ModelError, model_checksum


@dataclass(frozen=True, eq=False)
class StateHeuristic:
    values: np.ndarray  # expected cost-to-goal per state
    kind: str  # "lower" or "upper"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if self.kind not in ("lower", "upper"):
            raise ModelError(f"heuristic kind must be 'lower' or 'upper', got {self.kind!r}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ModelError("heuristic values must be finite and non-negative")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __call__(self, b: Belief) -> float:
        return belief_heuristic(self, b)


def solve_qmdp(m: GoalPomdp, tolerance: float = 1e-6, max_iter: int = 100_000) -> StateHeuristic:
    """Q_MDP lower bound: value iteration on the fully observable relaxation.

    Iteration starts from zero, so with non-negative costs every iterate stays
    below the MDP fixed point and the result is admissible at any tolerance.
    """
    if tolerance <= 0:
        raise ModelError("tolerance must be positive")
    S = m.n_states
    C = m.cost
    # stack transitions once: (A*S, S)
    import scipy.sparse as sp

    T = sp.vstack(m.transition, format="csr")
    v = np.zeros(S)
    for _ in range(max_iter):
        q = C.T + (T @ v).reshape(m.n_actions, S)
        new = q.min(axis=0)
        new[m.is_goal] = 0.0
        resid = np.max(np.abs(new - v))
        v = new
        if resid < tolerance:
            break
    else:
        raise RuntimeError("Q_MDP value iteration did not converge")
    return StateHeuristic(v, "lower")


def blind_upper_bound(m: GoalPomdp) -> StateHeuristic:
    """Blind-action bound max C(s,a) / (1 - gamma) off the goal, 0 on it."""
    if m.discount is None:
        raise ModelError("blind bound needs the source discount (termination mass)")
    bound = float(m.cost.max()) / (1.0 - m.discount)
    v = np.full(m.n_states, bound)
    v[m.is_goal] = 0.0
    return StateHeuristic(v, "upper")


def belief_heuristic(h: StateHeuristic, b: Belief) -> float:
    if b.states.size and b.states[-1] >= h.values.size:
        raise ModelError("heuristic does not cover every state of the belief")
    return float(h.values[b.states] @ b.probs)


def dump_heuristic(h: StateHeuristic, m: GoalPomdp, fh) -> None:
    fh.write(f"# kind={h.kind} checksum={model_checksum(m)}\n")
    for s, v in enumerate(h.values.tolist()):
        fh.write(f"{s}:1\t{v!r}\n")


def load_heuristic(fh, m: GoalPomdp) -> StateHeuristic:
    header = fh.readline().split()
    meta = dict(tok.split("=", 1) for tok in header[1:])
    if meta.get("checksum") != model_checksum(m):
        raise ModelError("heuristic file was written for a different model")
    values = np.zeros(m.n_states)
    for line in fh:
        if not line.strip():
            continue
        key, val = line.rstrip("\n").split("\t")
        values[int(key.split(":")[0])] = float(val)
    return StateHeuristic(values, meta["kind"])
