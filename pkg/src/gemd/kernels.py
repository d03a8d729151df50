"""Random-walk kernels, numba and pure numpy.

Both backends produce identical trajectories for identical inputs: the
uniform draw for (start, trial, step) comes from the counter-based
generator in :mod:`gemd.rng`, and the neighbour is selected as the first
CSR position whose running weight sum exceeds ``u * row_total``, with
running sums accumulated left to right in both paths.

Trajectory arrays have shape ``(n_starts, n_trials, length)``; entry
``[s, t, k]`` is the node occupied after step ``k + 1``, or -1 once the
walker has died on an empty row.
"""
import numpy as np

from . import rng
from ._backend import NUMBA_AVAILABLE, USE_NUMBA, njit

if NUMBA_AVAILABLE:
    from numba import prange
else:  # pragma: no cover
    prange = range

_rng_stream = rng._stream_key_nb
_rng_uniform = rng._uniform_nb


# -- row prefix sums ----------------------------------------------------------

@njit(cache=True)
def _row_cumsum_nb(indptr, data):
    out = np.empty(data.shape[0], np.float64)
    for i in range(indptr.shape[0] - 1):
        acc = 0.0
        for e in range(indptr[i], indptr[i + 1]):
            acc += data[e]
            out[e] = acc
    return out


def _row_cumsum_np(indptr, data):
    data = np.asarray(data, dtype=np.float64)
    out = np.empty_like(data)
    lo = np.asarray(indptr[:-1], dtype=np.int64)
    deg = np.diff(indptr)
    if len(deg) == 0 or deg.max(initial=0) == 0:
        return out
    acc = np.zeros(len(lo))
    for k in range(int(deg.max())):
        rows = np.flatnonzero(deg > k)
        pos = lo[rows] + k
        acc[rows] = acc[rows] + data[pos]
        out[pos] = acc[rows]
    return out


# -- first-order walks ----------------------------------------------------------

@njit(parallel=True, cache=True)
def _first_order_nb(indptr, indices, cum, starts, n_trials, trial_offset, length, key):
    n_starts = starts.shape[0]
    out = np.empty((n_starts, n_trials, length), np.int64)
    for si in prange(n_starts):
        s = starts[si]
        for t in range(n_trials):
            stream = _rng_stream(key, s, trial_offset + t)
            cur = s
            for step in range(length):
                if cur < 0:
                    out[si, t, step] = -1
                    continue
                lo = indptr[cur]
                hi = indptr[cur + 1]
                if lo == hi:
                    cur = -1
                    out[si, t, step] = -1
                    continue
                x = _rng_uniform(stream, step) * cum[hi - 1]
                a = lo
                b = hi - 1
                while a < b:
                    mid = (a + b) // 2
                    if cum[mid] > x:
                        b = mid
                    else:
                        a = mid + 1
                cur = indices[a]
                out[si, t, step] = cur
    return out


def _first_order_step_np(indptr, indices, cum, cur, u):
    """Vectorized first-order step for walkers at ``cur`` (all >= 0)."""
    lo = indptr[cur]
    hi = indptr[cur + 1]
    nxt = np.full(len(cur), -1, dtype=np.int64)
    live = hi > lo
    lo, hi, uu = lo[live], hi[live], u[live]
    x = uu * cum[hi - 1]
    a = lo.astype(np.int64)
    b = (hi - 1).astype(np.int64)
    while True:
        act = a < b
        if not act.any():
            break
        mid = (a + b) // 2
        gt = cum[mid] > x
        b = np.where(act & gt, mid, b)
        a = np.where(act & ~gt, mid + 1, a)
    nxt[live] = indices[a]
    return nxt


def _first_order_np(indptr, indices, cum, starts, n_trials, trial_offset, length, key):
    starts = np.asarray(starts, dtype=np.int64)
    n_starts = len(starts)
    s_rep = np.repeat(starts, n_trials)
    t_rep = np.tile(np.arange(n_trials, dtype=np.int64) + trial_offset, n_starts)
    streams = rng.stream_key_np(key, s_rep, t_rep)
    out = np.empty((len(s_rep), length), dtype=np.int64)
    cur = s_rep.copy()
    for step in range(length):
        u = rng.uniform_np(streams, step)
        alive = np.flatnonzero(cur >= 0)
        nxt = np.full(len(cur), -1, dtype=np.int64)
        if len(alive):
            nxt[alive] = _first_order_step_np(indptr, indices, cum, cur[alive], u[alive])
        cur = nxt
        out[:, step] = cur
    return out.reshape(n_starts, n_trials, length)


# -- second-order (memory) walks --------------------------------------------------

@njit(inline="always", cache=True)
def _is_adjacent(uindptr, uindices, a, b):
    lo = uindptr[a]
    hi = uindptr[a + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        v = uindices[mid]
        if v == b:
            return True
        if v < b:
            lo = mid + 1
        else:
            hi = mid
    return False


@njit(parallel=True, cache=True)
def _second_order_nb(indptr, indices, data, cum, uindptr, uindices, starts,
                     n_trials, trial_offset, length, key, inv_p, inv_q):
    n_starts = starts.shape[0]
    out = np.empty((n_starts, n_trials, length), np.int64)
    maxdeg = 0
    for i in range(indptr.shape[0] - 1):
        maxdeg = max(maxdeg, indptr[i + 1] - indptr[i])
    for si in prange(n_starts):
        buf = np.empty(max(maxdeg, 1), np.float64)
        s = starts[si]
        for t in range(n_trials):
            stream = _rng_stream(key, s, trial_offset + t)
            prev = -1
            cur = s
            for step in range(length):
                if cur < 0:
                    out[si, t, step] = -1
                    continue
                lo = indptr[cur]
                hi = indptr[cur + 1]
                if lo == hi:
                    prev = cur
                    cur = -1
                    out[si, t, step] = -1
                    continue
                u = _rng_uniform(stream, step)
                if step == 0:
                    x = u * cum[hi - 1]
                    a = lo
                    b = hi - 1
                    while a < b:
                        mid = (a + b) // 2
                        if cum[mid] > x:
                            b = mid
                        else:
                            a = mid + 1
                    sel = a
                else:
                    acc = 0.0
                    for e in range(lo, hi):
                        j = indices[e]
                        if j == prev:
                            bias = inv_p
                        elif _is_adjacent(uindptr, uindices, prev, j):
                            bias = 1.0
                        else:
                            bias = inv_q
                        acc += data[e] * bias
                        buf[e - lo] = acc
                    x = u * acc
                    sel = hi - 1
                    for e in range(lo, hi):
                        if buf[e - lo] > x:
                            sel = e
                            break
                prev = cur
                cur = indices[sel]
                out[si, t, step] = cur
    return out


def _second_order_np(indptr, indices, data, cum, uindptr, uindices, starts,
                     n_trials, trial_offset, length, key, inv_p, inv_q,
                     block=1 << 22):
    starts = np.asarray(starts, dtype=np.int64)
    n = len(indptr) - 1
    n_starts = len(starts)
    s_rep = np.repeat(starts, n_trials)
    t_rep = np.tile(np.arange(n_trials, dtype=np.int64) + trial_offset, n_starts)
    streams = rng.stream_key_np(key, s_rep, t_rep)
    urows = np.repeat(np.arange(n, dtype=np.int64), np.diff(uindptr))
    ukeys = urows * n + np.asarray(uindices, dtype=np.int64)
    deg_all = np.diff(indptr)

    out = np.empty((len(s_rep), length), dtype=np.int64)
    cur = s_rep.copy()
    prev = np.full(len(cur), -1, dtype=np.int64)
    for step in range(length):
        u = rng.uniform_np(streams, step)
        nxt = np.full(len(cur), -1, dtype=np.int64)
        alive = np.flatnonzero(cur >= 0)
        if step == 0:
            if len(alive):
                nxt[alive] = _first_order_step_np(indptr, indices, cum, cur[alive], u[alive])
        else:
            alive = alive[deg_all[cur[alive]] > 0]
            if len(alive):
                maxdeg = int(deg_all[cur[alive]].max())
                chunk = max(1, block // maxdeg)
                for c0 in range(0, len(alive), chunk):
                    w_idx = alive[c0:c0 + chunk]
                    nxt[w_idx] = _memory_step_np(indptr, indices, data, ukeys, n,
                                                 cur[w_idx], prev[w_idx], u[w_idx],
                                                 inv_p, inv_q)
        prev = np.where(cur >= 0, cur, prev)
        cur = nxt
        out[:, step] = cur
    return out.reshape(n_starts, n_trials, length)


def _memory_step_np(indptr, indices, data, ukeys, n, cur, prev, u, inv_p, inv_q):
    lo = indptr[cur].astype(np.int64)
    deg = (indptr[cur + 1] - indptr[cur]).astype(np.int64)
    width = int(deg.max())
    offs = np.arange(width, dtype=np.int64)
    inside = offs[None, :] < deg[:, None]
    pos = np.where(inside, lo[:, None] + offs[None, :], 0)
    nbr = indices[pos]
    keys = prev[:, None] * n + nbr
    hit = np.searchsorted(ukeys, keys)
    hit_ok = hit < len(ukeys)
    adjacent = np.zeros_like(hit_ok)
    adjacent[hit_ok] = ukeys[hit[hit_ok]] == keys[hit_ok]
    bias = np.where(nbr == prev[:, None], inv_p, np.where(adjacent, 1.0, inv_q))
    w = np.where(inside, data[pos] * bias, 0.0)
    run = np.cumsum(w, axis=1)
    total = run[np.arange(len(cur)), deg - 1]
    x = u * total
    sel = np.minimum(np.count_nonzero(run <= x[:, None], axis=1), deg - 1)
    return indices[lo + sel]


KERNELS = {
    "numba": {"cumsum": _row_cumsum_nb, "first": _first_order_nb, "second": _second_order_nb},
    "numpy": {"cumsum": _row_cumsum_np, "first": _first_order_np, "second": _second_order_np},
}


def get_kernels(backend=None):
    if backend is None:
        backend = "numba" if USE_NUMBA else "numpy"
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    return KERNELS[backend]
