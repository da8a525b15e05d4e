"""Compiled inner loop of the belief update."""
import numpy as np
from numba import njit


@njit(cache=True)
def successor_arrays(T_ptr, T_idx, T_dat, O_ptr, O_idx, O_dat, states, probs, n_states, prune_tol):
    """Group every reachable (o, s') by observation.

    Returns (obs, pr, offsets, post_states, post_probs): group g covers
    post_states[offsets[g]:offsets[g+1]], sorted by state, with posterior
    probabilities renormalised after dropping entries below ``prune_tol``.
    """
    pred = np.zeros(n_states)
    touched = np.empty(n_states, dtype=np.int64)
    nt = 0
    for i in range(states.size):
        s = states[i]
        p = probs[i]
        for k in range(T_ptr[s], T_ptr[s + 1]):
            s2 = T_idx[k]
            if pred[s2] == 0.0:
                touched[nt] = s2
                nt += 1
            pred[s2] += p * T_dat[k]
    nxt = np.sort(touched[:nt])
    total = 0
    for i in range(nt):
        s2 = nxt[i]
        total += O_ptr[s2 + 1] - O_ptr[s2]
    e_obs = np.empty(total, dtype=np.int64)
    e_st = np.empty(total, dtype=np.int64)
    e_w = np.empty(total)
    j = 0
    for i in range(nt):
        s2 = nxt[i]
        m = pred[s2]
        for k in range(O_ptr[s2], O_ptr[s2 + 1]):
            e_obs[j] = O_idx[k]
            e_st[j] = s2
            e_w[j] = m * O_dat[k]
            j += 1
    order = np.argsort(e_obs, kind="mergesort")
    e_obs = e_obs[order]
    e_st = e_st[order]
    e_w = e_w[order]

    n_groups = 0
    for i in range(total):
        if i == 0 or e_obs[i] != e_obs[i - 1]:
            n_groups += 1
    obs = np.empty(n_groups, dtype=np.int64)
    pr = np.empty(n_groups)
    offsets = np.empty(n_groups + 1, dtype=np.int64)
    out_st = np.empty(total, dtype=np.int64)
    out_p = np.empty(total)
    g = -1
    i = 0
    w = 0
    while i < total:
        start = i
        o = e_obs[i]
        acc = 0.0
        while i < total and e_obs[i] == o:
            acc += e_w[i]
            i += 1
        if acc <= 0.0:
            continue
        g += 1
        obs[g] = o
        pr[g] = acc
        offsets[g] = w
        kept = 0.0
        w0 = w
        for k in range(start, i):
            q = e_w[k] / acc
            if q > 0.0 and (q >= prune_tol or i - start == 1):
                out_st[w] = e_st[k]
                out_p[w] = q
                kept += q
                w += 1
        if kept != 1.0:
            for k in range(w0, w):
                out_p[k] /= kept
    n = g + 1
    offsets[n] = w
    return obs[:n], pr[:n], offsets[:n + 1], out_st[:w], out_p[:w]


@njit(cache=True)
def _mix(x):
    # splitmix64 finaliser
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@njit(cache=True)
def key_hash(states, levels, lo, hi):
    """Two independent 64-bit hashes of the (state, level) pairs in [lo, hi)."""
    m1 = np.uint64(0x9E3779B97F4A7C15)
    h1 = np.uint64(0x243F6A8885A308D3)
    h2 = np.uint64(0x13198A2E03707344)
    for i in range(lo, hi):
        v = np.uint64(states[i]) * np.uint64(1 << 20) + np.uint64(levels[i])
        h1 = _mix(h1 ^ (v + m1))
        h2 = _mix(h2 + v * m1 + np.uint64(i - lo))
    return h1, h2


@njit(cache=True)
def group_keys(states, probs, offsets, D, slack, lower, upper):
    """Per successor group: heuristic lower/upper bounds and key hashes."""
    n = offsets.size - 1
    levels = np.empty(states.size, dtype=np.int64)
    for i in range(states.size):
        lv = np.int64(np.ceil(probs[i] * D - slack))
        levels[i] = lv if lv > 1 else 1
    hl = np.zeros(n)
    hh = np.zeros(n)
    k1 = np.empty(n, dtype=np.uint64)
    k2 = np.empty(n, dtype=np.uint64)
    for g in range(n):
        for i in range(offsets[g], offsets[g + 1]):
            hl[g] += lower[states[i]] * probs[i]
            hh[g] += upper[states[i]] * probs[i]
        k1[g], k2[g] = key_hash(states, levels, offsets[g], offsets[g + 1])
    return hl, hh, k1, k2, levels


@njit(cache=True)
def expand(T_ptr, T_idx, T_dat, O_ptr, O_idx, O_dat, states, probs, n_states, prune_tol,
           D, slack, lower, upper):
    """``successor_arrays`` followed by ``group_keys`` in one call."""
    obs, pr, off, st, pp = successor_arrays(T_ptr, T_idx, T_dat, O_ptr, O_idx, O_dat,
                                            states, probs, n_states, prune_tol)
    hl, hh, k1, k2, levels = group_keys(st, pp, off, D, slack, lower, upper)
    return obs, pr, off, st, pp, hl, hh, k1, k2
