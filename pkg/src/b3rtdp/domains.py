"""Benchmark domain generators: Tiger, RockSample and Tag.

All generators return a :class:`DiscountedPomdp` with discount 0.95 unless
told otherwise. Layouts are fixed tables so results are reproducible; each
generator has a matching ``*_layout`` function that renders the map as text.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.sparse as sp

from .model import Belief, DiscountedPomdp, ModelError, dense_model

DEFAULT_DISCOUNT = 0.95


def make_tiger(accuracy: float = 0.85, discount: float = DEFAULT_DISCOUNT) -> DiscountedPomdp:
    """The classic two-door tiger problem (listen -1, right door +10, tiger -100)."""
    T = np.zeros((3, 2, 2))
    T[0] = np.eye(2)
    T[1] = T[2] = 0.5
    Z = np.zeros((3, 2, 2))
    Z[0] = [[accuracy, 1 - accuracy], [1 - accuracy, accuracy]]
    Z[1] = Z[2] = 0.5
    R = np.array([[-1.0, -100.0, 10.0], [-1.0, 10.0, -100.0]])
    names = (("tiger-left", "tiger-right"), ("listen", "open-left", "open-right"),
             ("tiger-left", "tiger-right"))
    return dense_model(T, Z, R, discount, [0.5, 0.5], names)


# -- RockSample ---------------------------------------------------------------

# (x, y) rock coordinates and rover start for the canonical instances.
ROCKSAMPLE_LAYOUTS = {
    (4, 4): ([(3, 1), (2, 1), (1, 3), (1, 0)], (0, 2)),
    (5, 5): ([(2, 4), (0, 4), (3, 3), (2, 2), (4, 1)], (0, 2)),
    (5, 7): ([(1, 0), (2, 1), (1, 2), (2, 2), (4, 2), (0, 3), (3, 4)], (0, 2)),
    (7, 8): ([(2, 0), (0, 1), (3, 1), (6, 3), (2, 4), (3, 4), (5, 5), (1, 6)], (0, 3)),
    (11, 11): ([(0, 3), (0, 7), (1, 8), (2, 4), (3, 3), (3, 8), (4, 3), (5, 8), (6, 1),
                (9, 3), (9, 9)], (0, 5)),
}

MOVES = {"north": (0, 1), "south": (0, -1), "east": (1, 0), "west": (-1, 0)}


def rocksample_layout(n: int, k: int):
    """Rock positions and start cell for RockSample_n_k.

    Canonical instances come from the table above; any other (n, k) gets a
    seeded random layout (seed = 1000 n + k) with the rover starting at the
    middle of the west edge.
    """
    if n < 1 or k < 1:
        raise ModelError("RockSample needs n >= 1 and k >= 1")
    if k > n * n:
        raise ModelError(f"{k} rocks do not fit on a {n}x{n} grid")
    if (n, k) in ROCKSAMPLE_LAYOUTS:
        rocks, start = ROCKSAMPLE_LAYOUTS[(n, k)]
        return list(rocks), start
    rng = np.random.default_rng(1000 * n + k)
    cells = [(x, y) for y in range(n) for x in range(n)]
    pick = rng.choice(len(cells), size=k, replace=False)
    return [cells[i] for i in sorted(pick)], (0, n // 2)


def rocksample_dump(n: int, k: int) -> str:
    rocks, start = rocksample_layout(n, k)
    grid = [["." for _ in range(n)] for _ in range(n)]
    for i, (x, y) in enumerate(rocks):
        grid[y][x] = str(i) if i < 10 else chr(ord("a") + i - 10)
    sx, sy = start
    grid[sy][sx] = "S" if grid[sy][sx] == "." else grid[sy][sx]
    # north up, exit column marked on the east
    return "\n".join("".join(row) + ">" for row in reversed(grid))


def make_rocksample(n: int, k: int, half_distance: float = 20.0,
                    discount: float = DEFAULT_DISCOUNT) -> DiscountedPomdp:
    """RockSample_n_k.

    State id = ((y * n + x) << k) | rock_bits, plus one terminal state with
    id n*n*2**k. Bit i set means rock i is good. Observations are
    ``none``, ``good`` and ``bad``; the rover position is implied by the
    known start and deterministic moves.
    """
    rocks, start = rocksample_layout(n, k)
    if half_distance <= 0:
        raise ModelError("half_distance must be positive")
    n_bits = 1 << k
    n_cells = n * n
    S = n_cells * n_bits + 1
    term = S - 1
    actions = ["move_north", "move_south", "move_east", "move_west", "sample"] + [
        f"sense_{i + 1}" for i in range(k)]
    A = len(actions)
    rock_at = {pos: i for i, pos in enumerate(rocks)}

    bits = np.arange(n_bits)
    rows_T = [[] for _ in range(A)]
    cols_T = [[] for _ in range(A)]
    R = np.zeros((S, A))
    obs_rows = [[] for _ in range(A)]
    obs_cols = [[] for _ in range(A)]
    obs_vals = [[] for _ in range(A)]

    for cell in range(n_cells):
        x, y = cell % n, cell // n
        base = cell << k
        sid = base + bits
        for a, (dx, dy) in enumerate(MOVES.values()):
            nx_, ny_ = x + dx, y + dy
            if nx_ >= n:
                nxt = np.full(n_bits, term)
                R[sid, a] = 10.0
            elif 0 <= nx_ and 0 <= ny_ < n:
                nxt = ((ny_ * n + nx_) << k) + bits
            else:
                nxt = sid
            rows_T[a].append(sid)
            cols_T[a].append(nxt)
        # sample
        a = 4
        if (x, y) in rock_at:
            i = rock_at[(x, y)]
            good = (bits >> i) & 1
            R[sid, a] = np.where(good == 1, 10.0, -10.0)
            nxt = base + (bits & ~(1 << i))
        else:
            R[sid, a] = -10.0
            nxt = sid
        rows_T[a].append(sid)
        cols_T[a].append(nxt)
        for i, (rx, ry) in enumerate(rocks):
            rows_T[5 + i].append(sid)
            cols_T[5 + i].append(sid)

    for a in range(A):
        rows_T[a].append(np.array([term]))
        cols_T[a].append(np.array([term]))
    trans = []
    for a in range(A):
        r = np.concatenate(rows_T[a])
        c = np.concatenate(cols_T[a])
        trans.append(sp.csr_matrix((np.ones(r.size), (r, c)), shape=(S, S)))

    # observations: 0 none, 1 good, 2 bad
    all_states = np.arange(S)
    for a in range(5):
        obs_rows[a] = [all_states]
        obs_cols[a] = [np.zeros(S, dtype=int)]
        obs_vals[a] = [np.ones(S)]
    for i, (rx, ry) in enumerate(rocks):
        a = 5 + i
        for cell in range(n_cells):
            x, y = cell % n, cell // n
            d = math.hypot(x - rx, y - ry)
            acc = 0.5 * (1.0 + 2.0 ** (-d / half_distance))
            sid = (cell << k) + bits
            good = ((bits >> i) & 1) == 1
            p_good = np.where(good, acc, 1.0 - acc)
            for o, p in ((1, p_good), (2, 1.0 - p_good)):
                nz = p > 0
                obs_rows[a].append(sid[nz])
                obs_cols[a].append(np.full(int(nz.sum()), o))
                obs_vals[a].append(p[nz])
        obs_rows[a].append(np.array([term]))
        obs_cols[a].append(np.array([0]))
        obs_vals[a].append(np.array([1.0]))
    observ = [
        sp.csr_matrix((np.concatenate(obs_vals[a]),
                       (np.concatenate(obs_rows[a]), np.concatenate(obs_cols[a]))), shape=(S, 3))
        for a in range(A)
    ]

    sx, sy = start
    b0_states = ((sy * n + sx) << k) + bits
    b0 = Belief(b0_states, np.full(n_bits, 1.0 / n_bits))
    names = []
    for cell in range(n_cells):
        x, y = cell % n, cell // n
        for b in range(n_bits):
            names.append(f"x{x}y{y}r{b:0{k}b}")
    names.append("terminal")
    return DiscountedPomdp(
        states=tuple(names), actions=tuple(actions), observations=("none", "good", "bad"),
        transition=tuple(trans), observation_fn=tuple(observ), initial_belief=b0,
        reward=R, discount=discount,
    )


# -- Tag ----------------------------------------------------------------------

# The 29-cell map: two full rows of ten plus a 3x3 block above columns 5..7.
TAG_MAP = (
    ".....###..",
    ".....###..",
    ".....###..",
    "##########",
    "##########",
)
TAG_AWAY_PROB = 0.8


def tag_cells() -> list:
    cells = []
    for row, line in enumerate(reversed(TAG_MAP)):
        for x, ch in enumerate(line):
            if ch == "#":
                cells.append((x, row))
    return cells


def tag_dump() -> str:
    cells = tag_cells()
    index = {c: i for i, c in enumerate(cells)}
    lines = []
    for row in reversed(range(len(TAG_MAP))):
        lines.append(" ".join(f"{index[(x, row)]:2d}" if (x, row) in index else " ."
                              for x in range(len(TAG_MAP[0]))))
    return "\n".join(lines)


def _tag_human_moves(cells, index, robot, human):
    """Distribution over the human's next cell given robot and human cells."""
    rx, ry = cells[robot]
    hx, hy = cells[human]
    dist = abs(hx - rx) + abs(hy - ry)
    away = []
    for dx, dy in MOVES.values():
        nxt = index.get((hx + dx, hy + dy))
        if nxt is not None and abs(hx + dx - rx) + abs(hy + dy - ry) > dist:
            away.append(nxt)
    out = {human: 1.0 - TAG_AWAY_PROB}
    if not away:
        out[human] += TAG_AWAY_PROB
    for c in away:
        out[c] = out.get(c, 0.0) + TAG_AWAY_PROB / len(away)
    return out


def make_tag(discount: float = DEFAULT_DISCOUNT) -> DiscountedPomdp:
    """Tag on the 29-cell map.

    State id = robot * 30 + human, where human == 29 means tagged (terminal).
    Observation id = robot * 2 + seen, seen = robot and human share a cell
    (a tagged state reports seen). The start belief is uniform over all
    untagged states.
    """
    cells = tag_cells()
    index = {c: i for i, c in enumerate(cells)}
    N = len(cells)
    H = N + 1
    S = N * H
    actions = ("move_north", "move_south", "move_east", "move_west", "tag")
    A = len(actions)
    T = [dict() for _ in range(A)]
    R = np.zeros((S, A))

    def sid(r, h):
        return r * H + h

    for r in range(N):
        for h in range(N):
            s = sid(r, h)
            hm = _tag_human_moves(cells, index, r, h)
            for a, (dx, dy) in enumerate(MOVES.values()):
                x, y = cells[r]
                r2 = index.get((x + dx, y + dy), r)
                T[a][s] = {sid(r2, h2): p for h2, p in hm.items()}
                R[s, a] = -1.0
            if r == h:
                T[4][s] = {sid(r, N): 1.0}
                R[s, 4] = 10.0
            else:
                T[4][s] = {s: 1.0}
                R[s, 4] = -10.0
        for a in range(A):
            T[a][sid(r, N)] = {sid(r, N): 1.0}
    trans = []
    for a in range(A):
        rr, cc, vv = [], [], []
        for s, row in T[a].items():
            for s2, p in row.items():
                rr.append(s)
                cc.append(s2)
                vv.append(p)
        trans.append(sp.csr_matrix((vv, (rr, cc)), shape=(S, S)))
    obs_col = np.array([2 * r + int(h == r or h == N) for r in range(N) for h in range(H)])
    Z = sp.csr_matrix((np.ones(S), (np.arange(S), obs_col)), shape=(S, 2 * N))
    b0_states = np.array([sid(r, h) for r in range(N) for h in range(N)])
    b0 = Belief(b0_states, np.full(b0_states.size, 1.0 / b0_states.size))
    states = tuple(f"r{r}h{'T' if h == N else h}" for r in range(N) for h in range(H))
    observations = tuple(f"r{r}{'seen' if k else 'unseen'}" for r in range(N) for k in (0, 1))
    return DiscountedPomdp(
        states=states, actions=actions, observations=observations,
        transition=tuple(trans), observation_fn=tuple(Z for _ in range(A)),
        initial_belief=b0, reward=R, discount=discount,
    )


def make_domain(name: str, **kwargs) -> DiscountedPomdp:
    """Look up a generator by name: ``tiger``, ``tag`` or ``rocksample_N_K``."""
    name = name.lower()
    if name == "tiger":
        return make_tiger(**kwargs)
    if name == "tag":
        return make_tag(**kwargs)
    if name.startswith("rocksample"):
        parts = name.split("_")
        if len(parts) != 3:
            raise ModelError(f"expected rocksample_N_K, got {name!r}")
        return make_rocksample(int(parts[1]), int(parts[2]), **kwargs)
    raise ModelError(f"unknown domain {name!r}")


def random_pomdp(rng: np.random.Generator, n_states: int = 4, n_actions: int = 2,
                 n_observations: int = 2, discount: float = 0.9,
                 density: float = 0.7) -> DiscountedPomdp:
    """Small random dense-ish model for property tests and oracles."""
    S, A, O = n_states, n_actions, n_observations

    def rows(shape, width):
        mask = rng.random(shape) < density
        # at least one nonzero per row
        fix = rng.integers(width, size=shape[:-1])
        for idx in itertools.product(*map(range, shape[:-1])):
            mask[idx + (fix[idx],)] = True
        w = rng.random(shape) * mask
        return w / w.sum(axis=-1, keepdims=True)

    T = rows((A, S, S), S)
    Z = rows((A, S, O), O)
    R = rng.uniform(-1.0, 1.0, size=(S, A))
    b0 = rng.random(S) + 0.05
    return dense_model(T, Z, R, discount, b0 / b0.sum())
