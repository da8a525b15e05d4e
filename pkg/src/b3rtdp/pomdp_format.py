"""Reader and writer for the flat ``.pomdp`` text format.

Supported: ``discount``, ``values`` (reward or cost), ``states``/``actions``/
``observations`` as counts or name lists, ``start`` (vector, ``uniform``, a
single state, ``include``/``exclude`` lists), and ``T:``/``O:``/``R:`` entries
in element, row and matrix form with ``*`` wildcards and the ``identity`` and
``uniform`` keywords. Later entries override earlier ones. Rewards that
depend on the next state or observation are folded into R(s, a) by taking
the expectation under T and O.
"""
from __future__ import annotations

import re
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .model import Belief, DiscountedPomdp, ModelError

_NUMBER = re.compile(r"^[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$")
_KEYWORDS = ("discount", "values", "states", "actions", "observations", "start", "T", "O", "R")


class PomdpSyntaxError(ModelError):
    def __init__(self, msg: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


def _tokenize(text: str):
    toks = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        for t in line.replace(":", " : ").split():
            toks.append((t, lineno))
    return toks


class _Reader:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def eof(self):
        return self.i >= len(self.toks)

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j][0] if j < len(self.toks) else None

    @property
    def line(self):
        if self.i < len(self.toks):
            return self.toks[self.i][1]
        return self.toks[-1][1] if self.toks else None

    def next(self):
        if self.eof():
            raise PomdpSyntaxError("unexpected end of file", self.line)
        t = self.toks[self.i][0]
        self.i += 1
        return t

    def expect(self, tok):
        line = self.line
        t = self.next()
        if t != tok:
            raise PomdpSyntaxError(f"expected {tok!r}, got {t!r}", line)

    def number(self):
        line = self.line
        t = self.next()
        if not _NUMBER.match(t):
            raise PomdpSyntaxError(f"expected a number, got {t!r}", line)
        return float(t)

    def at_statement(self):
        return self.at_statement_after(0)

    def at_statement_after(self, k):
        j = self.i + k
        if j >= len(self.toks):
            return True
        return self.toks[j][0] in _KEYWORDS and (
            j + 1 < len(self.toks) and self.toks[j + 1][0] in (":", "include", "exclude"))

    def numbers_until_statement(self):
        out = []
        while not self.eof() and not self.at_statement():
            out.append(self.number())
        return out


class _Space:
    def __init__(self, kind, names):
        self.kind = kind
        self.names = tuple(names)
        self.index = {n: i for i, n in enumerate(self.names)}

    def __len__(self):
        return len(self.names)

    def resolve(self, tok, line):
        """Ids for one identifier token; ``*`` expands to every id."""
        if tok == "*":
            return range(len(self.names))
        if tok in self.index:
            return (self.index[tok],)
        if tok.isdigit() and int(tok) < len(self.names):
            return (int(tok),)
        raise PomdpSyntaxError(f"unknown {self.kind} {tok!r}", line)


def parse_pomdp_file(text: str) -> DiscountedPomdp:
    """Parse ``.pomdp`` text into a validated ``DiscountedPomdp``."""
    r = _Reader(text)
    discount = None
    sign = 1.0
    spaces = {}
    start = None
    T = O = None
    rew: dict = {}

    def need(*kinds):
        for k in kinds:
            if k not in spaces:
                raise PomdpSyntaxError(f"{k} must be declared before this entry", r.line)

    def ids_after_colon(kinds):
        """Read ': id' groups while they continue; return list of id-ranges."""
        out = []
        for k in kinds:
            if r.peek() != ":":
                break
            r.next()
            line = r.line
            out.append(spaces[k].resolve(r.next(), line))
        return out

    while not r.eof():
        line = r.line
        key = r.next()
        if key == "discount":
            r.expect(":")
            discount = r.number()
        elif key == "values":
            r.expect(":")
            v = r.next()
            if v not in ("reward", "cost"):
                raise PomdpSyntaxError(f"values must be reward or cost, got {v!r}", line)
            sign = 1.0 if v == "reward" else -1.0
        elif key in ("states", "actions", "observations"):
            r.expect(":")
            names = []
            while not r.eof() and not r.at_statement():
                names.append(r.next())
            if len(names) == 1 and names[0].isdigit():
                n = int(names[0])
                names = [str(i) for i in range(n)]
            if not names:
                raise PomdpSyntaxError(f"empty {key} declaration", line)
            kind = key[:-1] if key != "observations" else "observation"
            spaces[key] = _Space(kind, names)
        elif key == "start":
            need("states")
            S = len(spaces["states"])
            mode = r.next()
            if mode in ("include", "exclude"):
                r.expect(":")
                picked = set()
                while not r.eof() and not r.at_statement():
                    tline = r.line
                    picked.update(spaces["states"].resolve(r.next(), tline))
                chosen = sorted(picked) if mode == "include" else [s for s in range(S) if s not in picked]
                if not chosen:
                    raise PomdpSyntaxError("start set is empty", line)
                start = np.zeros(S)
                start[chosen] = 1.0 / len(chosen)
            elif mode == ":":
                if r.peek() == "uniform":
                    r.next()
                    start = np.full(S, 1.0 / S)
                elif S > 1 and r.peek() is not None and r.at_statement_after(1):
                    # a lone token names (or numbers) the start state
                    tline = r.line
                    (s0,) = spaces["states"].resolve(r.next(), tline)
                    start = np.zeros(S)
                    start[s0] = 1.0
                else:
                    vals = r.numbers_until_statement()
                    if len(vals) != S:
                        raise PomdpSyntaxError(f"start has {len(vals)} entries, expected {S}", line)
                    start = np.array(vals)
            else:
                raise PomdpSyntaxError(f"bad start declaration {mode!r}", line)
        elif key in ("T", "O"):
            need("states", "actions", "observations")
            S, A = len(spaces["states"]), len(spaces["actions"])
            if T is None:
                T = [dict() for _ in range(A)]
                O = [dict() for _ in range(A)]
            r.expect(":")
            acts = spaces["actions"].resolve(r.next(), line)
            if key == "T":
                ids = ids_after_colon(("states", "states"))
                table, width, col_space = T, S, spaces["states"]
            else:
                ids = ids_after_colon(("states", "observations"))
                table, width, col_space = O, len(spaces["observations"]), spaces["observations"]
            _assign_prob(r, table, acts, ids, S, width, line, square=(key == "T"))
        elif key == "R":
            need("states", "actions", "observations")
            r.expect(":")
            acts = spaces["actions"].resolve(r.next(), line)
            ids = ids_after_colon(("states", "states", "observations"))
            _assign_reward(r, rew, acts, ids, len(spaces["states"]), len(spaces["observations"]), line)
        else:
            raise PomdpSyntaxError(f"unexpected token {key!r}", line)

    if discount is None:
        raise PomdpSyntaxError("missing discount declaration")
    for k in ("states", "actions", "observations"):
        if k not in spaces:
            raise PomdpSyntaxError(f"missing {k} declaration")
    S, A, Ob = (len(spaces[k]) for k in ("states", "actions", "observations"))
    if T is None:
        T = [dict() for _ in range(A)]
        O = [dict() for _ in range(A)]
    trans = [_rows_to_csr(T[a], S, S) for a in range(A)]
    obs = [_rows_to_csr(O[a], S, Ob) for a in range(A)]
    R = np.zeros((S, A))
    for (a, s), entries in rew.items():
        R[s, a] = sign * _expected_reward(entries, trans[a], obs[a], s)
    if start is None:
        start = np.full(S, 1.0 / S)
    if abs(start.sum() - 1.0) > 1e-9 or np.any(start < 0):
        raise PomdpSyntaxError("start distribution must be non-negative and sum to 1")
    return DiscountedPomdp(
        states=spaces["states"].names, actions=spaces["actions"].names,
        observations=spaces["observations"].names,
        transition=tuple(trans), observation_fn=tuple(obs),
        initial_belief=Belief.from_dense(start), reward=R, discount=discount,
    )




def _assign_prob(r: _Reader, table, acts, ids, S, width, line, square):
    if len(ids) == 2:
        p = r.number()
        for a in acts:
            for s in ids[0]:
                row = table[a].setdefault(s, {})
                for c in ids[1]:
                    row[c] = p
        return
    if len(ids) == 1:
        if r.peek() == "uniform":
            r.next()
            vals = np.full(width, 1.0 / width)
        elif r.peek() == "identity":
            raise PomdpSyntaxError("identity is only valid for a whole matrix", line)
        else:
            vals = np.array([r.number() for _ in range(width)])
        row = {c: float(v) for c, v in enumerate(vals) if v != 0}
        for a in acts:
            for s in ids[0]:
                table[a][s] = dict(row)
        return
    # whole matrix
    if r.peek() == "uniform":
        r.next()
        row = {c: 1.0 / width for c in range(width)}
        for a in acts:
            for s in range(S):
                table[a][s] = dict(row)
    elif r.peek() == "identity":
        r.next()
        if not square and width != S:
            raise PomdpSyntaxError("identity needs a square matrix", line)
        for a in acts:
            for s in range(S):
                table[a][s] = {s: 1.0}
    else:
        mat = np.array([r.number() for _ in range(S * width)]).reshape(S, width)
        for a in acts:
            for s in range(S):
                table[a][s] = {c: float(v) for c, v in enumerate(mat[s]) if v != 0}


def _assign_reward(r: _Reader, rew, acts, ids, S, Ob, line):
    def put(a, s, sp_, o, v):
        if sp_ is None and o is None:
            rew[(a, s)] = [(None, None, v)]
        else:
            rew.setdefault((a, s), []).append((sp_, o, v))

    if len(ids) == 3:
        v = r.number()
        wild_sp = ids[1] == range(S)
        wild_o = ids[2] == range(Ob)
        for a in acts:
            for s in ids[0]:
                if wild_sp and wild_o:
                    put(a, s, None, None, v)
                else:
                    for s2 in ([None] if wild_sp else ids[1]):
                        for o in ([None] if wild_o else ids[2]):
                            put(a, s, s2, o, v)
    elif len(ids) == 2:
        vals = [r.number() for _ in range(Ob)]
        for a in acts:
            for s in ids[0]:
                for s2 in ids[1]:
                    for o, v in enumerate(vals):
                        put(a, s, s2, o, v)
    elif len(ids) == 1:
        vals = np.array([r.number() for _ in range(S * Ob)]).reshape(S, Ob)
        for a in acts:
            for s in ids[0]:
                for s2 in range(S):
                    for o in range(Ob):
                        put(a, s, s2, o, float(vals[s2, o]))
    else:
        raise PomdpSyntaxError("R entries need at least a start state", line)


def _expected_reward(entries, Ta, Oa, s):
    if len(entries) == 1 and entries[0][0] is None and entries[0][1] is None:
        return entries[0][2]
    total = 0.0
    lo, hi = Ta.indptr[s], Ta.indptr[s + 1]
    for s2, pt in zip(Ta.indices[lo:hi], Ta.data[lo:hi]):
        olo, ohi = Oa.indptr[s2], Oa.indptr[s2 + 1]
        for o, po in zip(Oa.indices[olo:ohi], Oa.data[olo:ohi]):
            v = 0.0
            for e_sp, e_o, e_v in entries:
                if (e_sp is None or e_sp == s2) and (e_o is None or e_o == o):
                    v = e_v
            total += pt * po * v
    return total


def _rows_to_csr(rows: dict, n_rows: int, n_cols: int) -> sp.csr_matrix:
    rr, cc, vv = [], [], []
    for s, row in rows.items():
        for c, p in row.items():
            if p != 0:
                rr.append(s)
                cc.append(c)
                vv.append(p)
    return sp.csr_matrix((vv, (rr, cc)), shape=(n_rows, n_cols))


_SAFE_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-\.]*$")


def _names_ok(names) -> bool:
    return len(set(names)) == len(names) and all(
        _SAFE_NAME.match(n) and n not in _KEYWORDS and n not in ("uniform", "identity", "include", "exclude")
        for n in names)


def write_pomdp(m: DiscountedPomdp, fh) -> None:
    """Serialise a discounted model; entries use numeric ids and exact floats."""
    fh.write(f"discount: {float(m.discount)!r}\n")
    fh.write("values: reward\n")
    for key, names in (("states", m.states), ("actions", m.actions), ("observations", m.observations)):
        names = [str(n) for n in names]
        if _names_ok(names):
            fh.write(f"{key}: {' '.join(names)}\n")
        else:
            fh.write(f"{key}: {len(names)}\n")
    fh.write("start: " + " ".join(repr(float(x)) for x in m.initial_belief.to_dense(m.n_states)) + "\n\n")
    for a, Ta in enumerate(m.transition):
        for s in range(m.n_states):
            for k in range(Ta.indptr[s], Ta.indptr[s + 1]):
                fh.write(f"T: {a} : {s} : {Ta.indices[k]} {float(Ta.data[k])!r}\n")
    for a, Oa in enumerate(m.observation_fn):
        for s in range(m.n_states):
            for k in range(Oa.indptr[s], Oa.indptr[s + 1]):
                fh.write(f"O: {a} : {s} : {Oa.indices[k]} {float(Oa.data[k])!r}\n")
    for s, a in zip(*np.nonzero(m.reward)):
        fh.write(f"R: {a} : {s} : * : * {float(m.reward[s, a])!r}\n")


def load_pomdp(path) -> DiscountedPomdp:
    with open(path) as fh:
        return parse_pomdp_file(fh.read())
