"""Numba kernels for the event-driven simulators.

All kernels take a ``numpy.random.Generator`` so that each replicate owns
its stream. Times are model (unrescaled) times throughout. The kernels
release the GIL, so replicates can run on a thread pool.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, types
from numba.typed import List

BIRTH = np.int8(1)
DEATH = np.int8(0)


@njit(cache=True, nogil=True)
def draw_offspring(rng, code, param, cdf):
    if code == 1:
        u = rng.random()
        ell = math.ceil(math.log1p(-u) * param)
        return max(np.int64(1), np.int64(ell))
    if code == 2:
        u = 1.0 - rng.random()
        return np.int64(math.floor(u ** param))
    if code == 3:
        u = 1.0 - rng.random()
        return np.int64(math.floor(1.0 / u))
    u = rng.random()
    return np.int64(np.searchsorted(cdf, u)) + 1


@njit(cache=True, nogil=True)
def draw_offspring_many(rng, code, param, cdf, size):
    out = np.empty(size, dtype=np.int64)
    for i in range(size):
        out[i] = draw_offspring(rng, code, param, cdf)
    return out


@njit(cache=True, nogil=True)
def _uniform_index(rng, n):
    i = np.int64(rng.random() * n)
    return min(i, n - 1)


# ---------------------------------------------------------------------------
# Fenwick tree over type labels


@njit(cache=True, nogil=True)
def _fen_add(tree, i, delta):
    i += 1
    n = tree.shape[0] - 1
    while i <= n:
        tree[i] += delta
        i += i & (-i)


@njit(cache=True, nogil=True)
def _fen_build(counts):
    n = counts.shape[0]
    tree = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        _fen_add(tree, i, counts[i])
    return tree


@njit(cache=True, nogil=True)
def _fen_find(tree, r):
    """Smallest index whose prefix sum exceeds r (0 <= r < total)."""
    n = tree.shape[0] - 1
    pos = 0
    step = 1
    while step * 2 <= n:
        step *= 2
    while step > 0:
        nxt = pos + step
        if nxt <= n and tree[nxt] <= r:
            pos = nxt
            r -= tree[nxt]
        step //= 2
    return pos


@njit(cache=True, nogil=True)
def _grow_f(a, n):
    b = np.empty(max(2 * a.shape[0], n), dtype=a.dtype)
    b[: a.shape[0]] = a
    return b


# Event records go into typed lists: rebinding a growable array inside a hot
# loop makes numba pay reference counting on every iteration.


@njit(cache=True, nogil=True)
def _as_array(lst, proto):
    out = np.empty(len(lst), dtype=proto.dtype)
    for i in range(len(lst)):
        out[i] = lst[i]
    return out


# ---------------------------------------------------------------------------
# logistic branching process


@njit(cache=True, nogil=True)
def population_run(rng, b, d, c, K, code, param, cdf, counts0, t_end, grid,
                   record_types, record_path):
    ntypes = counts0.shape[0]
    counts = counts0.copy()
    tree = _fen_build(counts)
    N = np.int64(counts.sum())
    ng = grid.shape[0]
    grid_n = np.zeros(ng, dtype=np.int64)
    grid_counts = np.zeros((ng if record_types else 0, ntypes), dtype=np.int64)
    path_t = List.empty_list(types.float64)
    path_n = List.empty_list(types.int64)
    if record_path:
        path_t.append(0.0)
        path_n.append(N)
    offspring_total = np.int64(0)
    deaths = np.int64(0)
    births = np.int64(0)
    t = 0.0
    gi = 0
    while N > 0:
        total = N * (b + d + c * N / K)
        t_next = t + rng.standard_exponential() / total
        # grid points at or before the jump see the left limit
        while gi < ng and grid[gi] <= t_next and grid[gi] <= t_end:
            grid_n[gi] = N
            if record_types:
                grid_counts[gi, :] = counts
            gi += 1
        if t_next > t_end:
            break
        t = t_next
        if rng.random() * total < b * N:
            typ = _fen_find(tree, _uniform_index(rng, N))
            ell = draw_offspring(rng, code, param, cdf)
            counts[typ] += ell
            _fen_add(tree, typ, ell)
            N += ell
            offspring_total += ell
            births += 1
        else:
            typ = _fen_find(tree, _uniform_index(rng, N))
            counts[typ] -= 1
            _fen_add(tree, typ, -1)
            N -= 1
            deaths += 1
        if record_path:
            path_t.append(t)
            path_n.append(N)
    while gi < ng and grid[gi] <= t_end:
        grid_n[gi] = N
        if record_types:
            grid_counts[gi, :] = counts
        gi += 1
    return (grid_n, grid_counts, _as_array(path_t, grid), _as_array(path_n, grid_n), N, counts,
            births, offspring_total, deaths, t)


# ---------------------------------------------------------------------------
# prelimit lookdown, full state


@njit(cache=True, nogil=True)
def uniform_subset(rng, m, s, scratch):
    """Sorted s-subset of {1..m}, uniform (Floyd's algorithm); scratch is a zeroed bool array."""
    out = np.empty(s, dtype=np.int64)
    for idx in range(s):
        j = m - s + idx  # candidates 0..j
        t = _uniform_index(rng, j + 1)
        if scratch[t]:
            t = j
        scratch[t] = True
        out[idx] = t + 1
    for idx in range(s):
        scratch[out[idx] - 1] = False
    out.sort()
    return out


@njit(cache=True, nogil=True)
def apply_birth(x, N, J):
    """In-place B_J on the level vector x[:N]; J sorted 1-based subset of [N + len(J) - 1]."""
    ell = J.shape[0] - 1
    parent = x[J[0] - 1]
    ji = ell
    r = N
    pos = N + ell
    while ji >= 1:
        if J[ji] == pos:
            x[pos - 1] = parent
            ji -= 1
        else:
            x[pos - 1] = x[r - 1]
            r -= 1
        pos -= 1
    return N + ell


@njit(cache=True, nogil=True)
def lookdown_full_run(rng, b, d, c, K, code, param, cdf, x0, n0, t_end, grid,
                      keep_log, max_size):
    cap = max(x0.shape[0], 2 * n0 + 16)
    x = np.zeros(cap, dtype=np.int64)
    x[: x0.shape[0]] = x0
    scratch = np.zeros(cap, dtype=np.bool_)
    N = np.int64(n0)
    ng = grid.shape[0]
    snap_n = np.zeros(ng, dtype=np.int64)
    snap_off = np.zeros(ng + 1, dtype=np.int64)
    snap_flat = np.empty(16, dtype=np.int64)
    log_t = List.empty_list(types.float64)
    log_kind = List.empty_list(types.int8)
    log_off = List.empty_list(types.int64)
    log_off.append(0)
    log_lv = List.empty_list(types.int64)
    min_n = N
    t = 0.0
    gi = 0
    while N > 0:
        total = N * (b + d + c * N / K)
        t_next = t + rng.standard_exponential() / total
        while gi < ng and grid[gi] <= t_next and grid[gi] <= t_end:
            snap_n[gi] = N
            end = snap_off[gi] + N
            if end > snap_flat.shape[0]:
                snap_flat = _grow_f(snap_flat, end)
            snap_flat[snap_off[gi]:end] = x[:N]
            snap_off[gi + 1] = end
            gi += 1
        if t_next > t_end:
            break
        t = t_next
        if rng.random() * total < b * N:
            ell = draw_offspring(rng, code, param, cdf)
            if N + ell > max_size:
                raise ValueError("population exceeded the oracle-mode size cap")
            if N + ell > x.shape[0]:
                newcap = max(2 * x.shape[0], N + ell)
                xx = np.zeros(newcap, dtype=np.int64)
                xx[: x.shape[0]] = x
                x = xx
                scratch = np.zeros(newcap, dtype=np.bool_)
            J = uniform_subset(rng, N + ell, ell + 1, scratch)
            N = apply_birth(x, N, J)
            if keep_log:
                log_t.append(t)
                log_kind.append(BIRTH)
                for j in J:
                    log_lv.append(j)
                log_off.append(len(log_lv))
        else:
            if keep_log:
                log_t.append(t)
                log_kind.append(DEATH)
                log_lv.append(N)
                log_off.append(len(log_lv))
            # the removed top level keeps its type as an extended coordinate
            N -= 1
        if N < min_n:
            min_n = N
    while gi < ng and grid[gi] <= t_end:
        snap_n[gi] = N
        end = snap_off[gi] + N
        if end > snap_flat.shape[0]:
            snap_flat = _grow_f(snap_flat, end)
        snap_flat[snap_off[gi]:end] = x[:N]
        snap_off[gi + 1] = end
        gi += 1
    return (x, N, min_n, snap_n, snap_off, snap_flat[: snap_off[ng]],
            _as_array(log_t, grid), _as_array(log_kind, np.zeros(0, np.int8)),
            _as_array(log_off, snap_off), _as_array(log_lv, snap_off))


# ---------------------------------------------------------------------------
# prelimit lookdown, size plus the lowest k levels


@njit(cache=True, nogil=True)
def restricted_birth(y, N, ell, mask, k):
    """Apply B_J to the first k extended levels y, given J restricted to [k] as a bitmask."""
    m = min(N + ell, k)
    old_live = min(N, k)
    minj = 0
    while not (mask >> minj) & 1:
        minj += 1
    parent = y[minj]
    old = y[:old_live].copy()
    r = 0
    for pos in range(m):
        if (mask >> pos) & 1 and pos != minj:
            y[pos] = parent
        else:
            y[pos] = old[r]
            r += 1


@njit(cache=True, nogil=True)
def lookdown_low_run(rng, b, d, c, K, code, param, cdf, y0, n0, k, t_end, grid):
    y = y0.copy()
    N = np.int64(n0)
    ng = grid.shape[0]
    snap_n = np.zeros(ng, dtype=np.int64)
    snap_y = np.zeros((ng, k), dtype=np.int64)
    log_t = List.empty_list(types.float64)
    log_kind = List.empty_list(types.int8)
    log_val = List.empty_list(types.int64)
    log_ell = List.empty_list(types.int64)
    min_n = N
    t = 0.0
    gi = 0
    while N > 0:
        total = N * (b + d + c * N / K)
        t_next = t + rng.standard_exponential() / total
        while gi < ng and grid[gi] <= t_next and grid[gi] <= t_end:
            snap_n[gi] = N
            snap_y[gi, :] = y
            gi += 1
        if t_next > t_end:
            break
        t = t_next
        logged = False
        kind = BIRTH
        val = np.int64(0)
        ell = np.int64(0)
        if rng.random() * total < b * N:
            ell = draw_offspring(rng, code, param, cdf)
            # sequential without-replacement membership of levels 1..k in J
            picks = ell + 1
            slots = N + ell
            mask = np.int64(0)
            hits = 0
            top = min(k, N + ell)
            for i in range(top):
                if picks == 0:
                    break
                if rng.random() * slots < picks:
                    mask |= np.int64(1) << i
                    picks -= 1
                    hits += 1
                slots -= 1
            # |J & [k]| == 1 means the parent is in [k] and every copy lands above k
            if hits >= 2:
                restricted_birth(y, N, ell, mask, k)
                logged = True
                val = mask
            N += ell
        else:
            if N <= k:
                logged = True
                kind = DEATH
                val = N
            N -= 1
        if logged:
            log_t.append(t)
            log_kind.append(kind)
            log_val.append(val)
            log_ell.append(ell)
        if N < min_n:
            min_n = N
    while gi < ng and grid[gi] <= t_end:
        snap_n[gi] = N
        snap_y[gi, :] = y
        gi += 1
    return (y, N, min_n, snap_n, snap_y, _as_array(log_t, grid),
            _as_array(log_kind, np.zeros(0, np.int8)), _as_array(log_val, snap_n),
            _as_array(log_ell, snap_n))
