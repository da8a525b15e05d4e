"""Hash table of (lower, upper) cost bounds keyed by discretised beliefs."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ._kernels import key_hash
from .heuristics import StateHeuristic
from .model import Belief, GoalPomdp, ModelError, model_checksum

# D * b(s) is computed in floating point; 0.3 * 10 must land in bucket 3
CEIL_SLACK = 1e-9


class DiscretizedBeliefKey(NamedTuple):
    states: tuple
    levels: tuple

    def __str__(self):
        return ",".join(f"{s}:{l}" for s, l in zip(self.states, self.levels))


def discretize_levels(b: Belief, D: int) -> np.ndarray:
    lv = np.ceil(b.probs * D - CEIL_SLACK).astype(np.int64)
    np.maximum(lv, 1, out=lv)
    return lv


def discretize_belief(b: Belief, D: int) -> DiscretizedBeliefKey:
    if D < 1:
        raise ModelError("discretisation D must be >= 1")
    return DiscretizedBeliefKey(tuple(b.states.tolist()), tuple(discretize_levels(b, D).tolist()))


def hash_key(states: np.ndarray, levels: np.ndarray) -> int:
    """128-bit integer fingerprint of a discretised belief (the table key)."""
    h1, h2 = key_hash(states, levels, 0, states.size)
    return (int(h1) << 64) | int(h2)


def belief_key(b: Belief, D: int) -> int:
    """Table key of ``discretize_belief(b, D)``; cached on the belief."""
    cache = b._dkeys
    if cache is not None and cache[0] == D:
        return cache[1]
    key = hash_key(b.states, discretize_levels(b, D))
    b._dkeys = (D, key)
    return key


class BoundedValueTable:
    """Discretised-belief value function with heuristic fallback.

    Keys are 128-bit fingerprints of the discretised belief; the readable
    key is kept alongside for serialisation. A miss returns the heuristic
    bounds of the exact belief and does not insert. Stores keep ``lower <= upper``: when a write would cross the
    bounds (two aliased beliefs disagreeing) both collapse to the midpoint and
    ``clamp_count`` is incremented.
    """

    def __init__(self, D: int, lower: StateHeuristic, upper: StateHeuristic):
        if D < 1:
            raise ModelError("discretisation D must be >= 1")
        self.D = int(D)
        self.lower = lower
        self.upper = upper
        self.table: dict = {}
        self.keys: dict = {}
        self.clamp_count = 0

    def __len__(self):
        return len(self.table)

    def heuristic_bounds(self, b: Belief):
        return (float(self.lower.values[b.states] @ b.probs),
                float(self.upper.values[b.states] @ b.probs))

    def get_bounds(self, b: Belief):
        rec = self.table.get(belief_key(b, self.D))
        if rec is not None:
            return rec
        return self.heuristic_bounds(b)

    def set_bounds(self, b: Belief, pair) -> None:
        lo, hi = float(pair[0]), float(pair[1])
        if lo < 0 or hi < 0:
            raise ModelError(f"bounds must be non-negative, got ({lo}, {hi})")
        if lo > hi:
            lo = hi = 0.5 * (lo + hi)
            self.clamp_count += 1
        key = belief_key(b, self.D)
        if key not in self.table:
            self.keys[key] = discretize_belief(b, self.D)
        self.table[key] = (lo, hi)

    def gap(self, b: Belief) -> float:
        lo, hi = self.get_bounds(b)
        return hi - lo

    def copy(self) -> "BoundedValueTable":
        out = BoundedValueTable(self.D, self.lower, self.upper)
        out.table = dict(self.table)
        out.keys = dict(self.keys)
        out.clamp_count = self.clamp_count
        return out

    # -- serialisation ---------------------------------------------------

    def dump(self, fh, m: GoalPomdp) -> None:
        fh.write(f"# D={self.D} checksum={model_checksum(m)} records={len(self.table)}\n")
        for key, (lo, hi) in self.table.items():
            fh.write(f"{self.keys[key]}\t{lo!r}\t{hi!r}\n")

    @classmethod
    def load(cls, fh, m: GoalPomdp, lower: StateHeuristic, upper: StateHeuristic,
             header: str = None) -> "BoundedValueTable":
        header = header if header is not None else fh.readline()
        if not header.startswith("# D="):
            raise ModelError("value table header missing")
        meta = dict(tok.split("=", 1) for tok in header[1:].split())
        if meta.get("checksum") != model_checksum(m):
            raise ModelError("value table was written for a different model")
        t = cls(int(meta["D"]), lower, upper)
        for line in fh:
            if line.startswith("#"):
                break
            if not line.strip():
                continue
            key, lo, hi = line.rstrip("\n").split("\t")
            pairs = [kv.split(":") for kv in key.split(",")]
            k = DiscretizedBeliefKey(tuple(int(s) for s, _ in pairs), tuple(int(l) for _, l in pairs))
            key = hash_key(np.asarray(k.states, dtype=np.int64), np.asarray(k.levels, dtype=np.int64))
            t.keys[key] = k
            t.table[key] = (float(lo), float(hi))
        return t


def get_bounds(b: Belief, t: BoundedValueTable):
    return t.get_bounds(b)


def set_bounds(b: Belief, pair, t: BoundedValueTable) -> None:
    t.set_bounds(b, pair)


def gap(b: Belief, t: BoundedValueTable) -> float:
    return t.gap(b)
