"""Compiled inner loops for partition sampling.

Cluster choice uses two integer Fenwick trees over cluster slots: one of
cluster sizes and one of slot occupancy. The weight of a slot is
``size - a * occupied`` so prefix weights are exact integers combined once,
with no floating drift across millions of updates.

All randomness enters as pre-drawn uniforms and permutations so the caller's
seeded stream fully determines the result.
"""
import math

import numpy as np
from numba import njit

# Labels in ``z`` are slot ids in 1..cap; 0 marks "unassigned".


@njit(cache=True)
def _fw_add(tree, idx, delta):
    cap = tree.size - 1
    while idx <= cap:
        tree[idx] += delta
        idx += idx & (-idx)


@njit(cache=True)
def _fw_find(tn, tc, a, target, topbit):
    """Slot whose cumulative weight first exceeds ``target``."""
    cap = tn.size - 1
    pos = 0
    step = topbit
    while step > 0:
        nxt = pos + step
        if nxt <= cap:
            w = tn[nxt] - a * tc[nxt]
            if w <= target:
                pos = nxt
                target -= w
        step >>= 1
    return pos + 1


@njit(cache=True)
def _topbit(cap):
    b = 1
    while b * 2 <= cap:
        b *= 2
    return b


@njit(cache=True)
def _setup(z, n_assigned, cap):
    sizes = np.zeros(cap + 1, np.int64)
    tn = np.zeros(cap + 1, np.int64)
    tc = np.zeros(cap + 1, np.int64)
    for j in range(n_assigned):
        sizes[z[j]] += 1
    l = 0
    for s in range(1, cap + 1):
        if sizes[s] > 0:
            l += 1
            _fw_add(tn, s, sizes[s])
            _fw_add(tc, s, 1)
    free = np.empty(cap, np.int64)
    nfree = 0
    for s in range(cap, 0, -1):
        if sizes[s] == 0:
            free[nfree] = s
            nfree += 1
    return sizes, tn, tc, free, nfree, l


@njit(cache=True)
def _choose(sizes, tn, tc, free, nfree, l, n_others, a, c0, c1, u, topbit):
    """Pick a slot for one element; returns (slot, nfree, l)."""
    exist_w = n_others - a * l
    new_w = c0 + c1 * l
    x = u * (exist_w + new_w)
    if x >= exist_w or l == 0:
        nfree -= 1
        s = free[nfree]
        sizes[s] = 1
        _fw_add(tn, s, 1)
        _fw_add(tc, s, 1)
        return s, nfree, l + 1
    s = _fw_find(tn, tc, a, x, topbit)
    if s > sizes.size - 1 or sizes[s] == 0:
        # rounding at the right edge: fall back to the last occupied slot
        s = sizes.size - 1
        while sizes[s] == 0:
            s -= 1
    sizes[s] += 1
    _fw_add(tn, s, 1)
    return s, nfree, l


@njit(cache=True)
def relabel_canonical(z):
    """In-place order-of-appearance relabeling; returns the cluster count."""
    cap = 0
    for j in range(z.size):
        if z[j] > cap:
            cap = z[j]
    mapping = np.zeros(cap + 1, np.int64)
    nxt = 0
    for j in range(z.size):
        s = z[j]
        if mapping[s] == 0:
            nxt += 1
            mapping[s] = nxt
        z[j] = mapping[s]
    return nxt


@njit(cache=True)
def gibbs_sweeps(z, n_frozen, a, c0, c1, orders, uniforms):
    """Resample ``z[order]`` for each row of ``orders`` (one row per sweep).

    Full conditional: existing cluster ``k`` with weight ``n_k - a``, new
    cluster with weight ``c0 + c1 * l`` (``l`` counted without the element).
    ``z`` is modified in place and left in canonical form.
    """
    n = z.size
    cap = n
    topbit = _topbit(cap)
    sizes, tn, tc, free, nfree, l = _setup(z, n, cap)
    for t in range(orders.shape[0]):
        for r in range(orders.shape[1]):
            j = orders[t, r]
            if j < n_frozen:
                continue
            s = z[j]
            sizes[s] -= 1
            _fw_add(tn, s, -1)
            if sizes[s] == 0:
                _fw_add(tc, s, -1)
                free[nfree] = s
                nfree += 1
                l -= 1
            s, nfree, l = _choose(sizes, tn, tc, free, nfree, l, n - 1, a, c0, c1,
                                  uniforms[t, r], topbit)
            z[j] = s
    return relabel_canonical(z)


@njit(cache=True)
def sequential_fill(z, start, a, c0, c1, uniforms):
    """Assign ``z[start:]`` one at a time by the proportional rule.

    ``z[:start]`` must hold canonical labels. With ``c1 = a`` this is the
    Pitman-Yor prediction rule and with ``a = c1 = 0`` the CRP.
    """
    n = z.size
    cap = n
    topbit = _topbit(cap)
    sizes, tn, tc, free, nfree, l = _setup(z, start, cap)
    for j in range(start, n):
        s, nfree, l = _choose(sizes, tn, tc, free, nfree, l, j, a, c0, c1,
                              uniforms[j - start], topbit)
        z[j] = s
    return relabel_canonical(z)


@njit(cache=True)
def rratio_sample(log_r, n, a, log_w, uniforms, z):
    """Sequential gCRSF draw of ``z`` (length ``n``) from a flat log R table.

    Element ``i + 1`` joins existing cluster ``k`` with probability
    ``(n_k - a) R(i+1, l) / R(i, l)`` and opens a new one with probability
    ``gamma0 p^-a R(i+1, l+1) / R(i, l)``.
    """
    sizes = np.zeros(n + 1, np.int64)
    z[0] = 1
    sizes[1] = 1
    l = 1
    for i in range(1, n):
        row_i = i * (i - 1) // 2
        row_n = (i + 1) * i // 2
        lr = log_r[row_i + l - 1]
        p_new = math.exp(log_w + log_r[row_n + l] - lr)
        p_old = (i - a * l) * math.exp(log_r[row_n + l - 1] - lr)
        if abs(p_new + p_old - 1.0) > 1e-10:
            raise ValueError("sequential rule probabilities do not sum to 1")
        u = uniforms[i] * (p_new + p_old)
        if u < p_new:
            l += 1
            sizes[l] = 1
            z[i] = l
            continue
        x = (u - p_new) / (p_old / (i - a * l))
        k = 1
        while k < l:
            x -= sizes[k] - a
            if x < 0:
                break
            k += 1
        sizes[k] += 1
        z[i] = k
    return l


@njit(cache=True)
def prefix_cluster_counts(z_rows, i):
    """Number of distinct labels in ``z[:i]`` for each row of canonical labels."""
    out = np.empty(z_rows.shape[0], np.int64)
    for r in range(z_rows.shape[0]):
        m = 0
        for j in range(i):
            if z_rows[r, j] > m:
                m = z_rows[r, j]
        out[r] = m
    return out


@njit(cache=True)
def _logaddexp(x, y):
    if x == -np.inf:
        return y
    if y == -np.inf:
        return x
    m = max(x, y)
    return m + math.log(math.exp(x - m) + math.exp(y - m))


@njit(cache=True)
def fill_r_table(entries, n, a, lw):
    """Backward R recursion in place over the packed triangle (row i at i(i-1)/2)."""
    o = n * (n - 1) // 2
    for j in range(n):
        entries[o + j] = 0.0
    for i in range(n - 1, 0, -1):
        oi = i * (i - 1) // 2
        on = i * (i + 1) // 2
        for j in range(1, i + 1):
            entries[oi + j - 1] = _logaddexp(entries[on + j - 1] + math.log(i - a * j),
                                             entries[on + j] + lw)


@njit(cache=True)
def fill_s_table(entries, n_max, a):
    """Forward S recursion in place over the packed triangle."""
    entries[0] = 0.0
    for n in range(1, n_max):
        po = n * (n - 1) // 2
        o = n * (n + 1) // 2
        entries[o] = entries[po] + math.log(n - a)
        for l in range(2, n + 1):
            entries[o + l - 1] = _logaddexp(entries[po + l - 1] + math.log(n - a * l),
                                            entries[po + l - 2])
        entries[o + n] = 0.0
