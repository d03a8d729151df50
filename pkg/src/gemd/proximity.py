"""Node proximity functions.

Closed forms: the finite-step transition matrix (FST), the infinite-step
transition matrix (IST), and the finite-step memory-modulated transition
matrix (FSMT). FSMT has two exact evaluators: the literal N^2 x N^2
operator product (validation scale only) and an equivalent arc-state
recursion whose size is the number of arcs, not N^2.

Estimators: visit counts of first-order and second-order random walks,
simulated with the kernels in :mod:`gemd.kernels`.

Index convention: ``Pi[i, j]`` is the expected number of visits to node
``j`` during an L-step walk started at node ``i``.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import kernels, rng
from .graph import effective_adjacency, transition_matrix, undirected_view
from .matrix import ParameterError, ProximityMatrix

DROP_TOL = 1e-12
FSMT_DENSE_CAP = 64


def _check_steps(length):
    if int(length) != length or length < 1:
        raise ParameterError(f"walk length must be a positive integer, got {length}")
    return int(length)


def _check_memory(p, q):
    if not (p > 0 and q > 0) or not (np.isfinite(p) and np.isfinite(q)):
        raise ParameterError(f"memory factors must be positive and finite, got p={p}, q={q}")


def _as_transition(P):
    if isinstance(P, ProximityMatrix):
        if P.kind != "transition":
            raise ParameterError(f"expected a transition matrix, got kind {P.kind!r}")
        return P.tocsr(), dict(P.params)
    return sp.csr_matrix(P), {}


# -- closed forms ---------------------------------------------------------------

def fst(P, length):
    """``sum_{l=1..L} P^l`` by repeated sparse multiply-accumulate.

    Entries of each power below 1e-12 are dropped after the multiply, so
    the result differs from the exact sum by at most ``L * n * 1e-12``
    per row.
    """
    length = _check_steps(length)
    p, params = _as_transition(P)
    term = p.copy()
    acc = p.copy()
    for _ in range(length - 1):
        term = (term @ p).tocsr()
        term.data[np.abs(term.data) < DROP_TOL] = 0.0
        term.eliminate_zeros()
        acc = acc + term
    acc = acc.tocsr()
    acc.sort_indices()
    return ProximityMatrix(acc, "fst", {**params, "L": length})


def ist(P, alpha, block=256):
    """``sum_{l>=1} alpha^(l-1) P^l = (1/alpha) ((I - alpha P)^-1 - I)``.

    The inverse is never formed: ``(I - alpha P) X = I`` is solved by a
    sparse LU factorization, ``block`` right-hand sides at a time.
    """
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    p, params = _as_transition(P)
    n = p.shape[0]
    lu = splu((sp.identity(n, format="csc") - alpha * p).tocsc())
    out = np.empty((n, n))
    for c0 in range(0, n, block):
        c1 = min(n, c0 + block)
        rhs = np.zeros((n, c1 - c0))
        rhs[np.arange(c0, c1), np.arange(c1 - c0)] = 1.0
        x = lu.solve(rhs)
        x[np.arange(c0, c1), np.arange(c1 - c0)] -= 1.0
        out[:, c0:c1] = x / alpha
    return ProximityMatrix(out, "ist", {**params, "alpha": alpha})


def memory_matrix(g, p, q):
    """``M[i, k]``: 1/p on the diagonal, 1 for adjacent pairs, 1/q at hop
    distance two, 0 otherwise (hops on the undirected view)."""
    _check_memory(p, q)
    u = undirected_view(g).astype(np.float64)
    adj = u.toarray() > 0
    two = (u @ u).toarray() > 0
    m = np.where(two, 1.0 / q, 0.0)
    m[adj] = 1.0
    np.fill_diagonal(m, 1.0 / p)
    return m


@dataclass(frozen=True, eq=False)
class FsmtOperators:
    """Operators of the memory-modulated walk on N^2 (current, previous) states.

    State ``(c, b)`` (walker at ``c``, arrived from ``b``) has flat index
    ``c * N + b``. ``expanded`` is column-stochastic on reachable states;
    ``initial`` holds the first-step distribution (one row per start node)
    and ``merge`` sums states sharing the current node.
    """

    memory: np.ndarray
    initial: sp.csr_matrix
    merge: sp.csr_matrix
    expanded: sp.csr_matrix
    p: float
    q: float
    dangling: str = "self-loop"
    params: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.memory.shape[0]


def fsmt_operators(g, p, q, dangling="self-loop", cap=FSMT_DENSE_CAP):
    """Assemble M, Q, Phi and W for graphs of at most ``cap`` nodes."""
    _check_memory(p, q)
    n = g.n
    if n < 1:
        raise ParameterError("FSMT operators of an empty graph")
    if n > cap:
        raise ParameterError(
            f"graph has {n} nodes; the N^2 x N^2 FSMT operators are limited to "
            f"{cap} nodes. Use fsmt_edge_state() for the exact value or "
            f"fsmt_walk_estimate() for a simulation")
    a = effective_adjacency(g, dangling)
    P = transition_matrix(g, dangling).tocsr()
    mem = memory_matrix(g, p, q)
    den = np.asarray(a @ mem)  # den[k, l] = sum_v A[k, v] M[v, l]

    ac = a.tocoo()
    k_arc, i_arc, w_arc = ac.row, ac.col, ac.data
    ell = np.arange(n)
    num = w_arc[:, None] * mem[i_arc][:, ell]
    d = den[k_arc][:, ell]
    ok = (num > 0) & (d > 0)
    arc_idx, l_idx = np.nonzero(ok)
    rows = i_arc[arc_idx] * n + k_arc[arc_idx]
    cols = k_arc[arc_idx] * n + l_idx
    vals = num[ok] / d[ok]
    W = sp.csr_matrix((vals, (rows, cols)), shape=(n * n, n * n))

    pc = P.tocoo()
    # start m steps to k with probability P[m, k]; state (k, m)
    Q = sp.csr_matrix((pc.data, (pc.row, pc.col * n + pc.row)), shape=(n, n * n))
    Phi = sp.kron(sp.identity(n, format="csr"), np.ones((1, n)), format="csr")
    return FsmtOperators(mem, Q, Phi, W, p, q, dangling)


def fsmt(ops, length):
    """``Pi^(L,p,q)`` from the operators: merge(sum_{l<L} W^l) Q^T, laid
    out with start nodes on rows."""
    length = _check_steps(length)
    x = ops.initial.T.toarray()
    acc = x.copy()
    for _ in range(length - 1):
        x = ops.expanded @ x
        acc += x
    pi = np.asarray((ops.merge @ acc).T)
    return ProximityMatrix(pi, "fsmt", {"L": length, "p": ops.p, "q": ops.q,
                                         "dangling": ops.dangling})


def arc_transitions(g, p, q, dangling="self-loop"):
    """Second-order walk as a first-order chain on arcs.

    Returns ``(T, X0, H)``: ``T[e, f]`` is the probability of moving from
    arc ``e = (b -> c)`` to arc ``f = (c -> j)``; ``X0[m, e]`` the
    first-step probability of arc ``e`` from start ``m``; ``H[e, c]`` = 1
    when arc ``e`` ends at ``c``. Arcs are the CSR positions of the
    effective adjacency.
    """
    _check_memory(p, q)
    a = effective_adjacency(g, dangling)
    n = a.shape[0]
    indptr = a.indptr.astype(np.int64)
    heads = a.indices.astype(np.int64)
    tails = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    n_arcs = len(heads)

    out_deg = np.diff(indptr)
    fan = out_deg[heads]
    e_rep = np.repeat(np.arange(n_arcs, dtype=np.int64), fan)
    first = np.repeat(indptr[heads], fan)
    offset = np.arange(len(e_rep), dtype=np.int64) - np.repeat(np.cumsum(fan) - fan, fan)
    f = first + offset
    b = tails[e_rep]
    j = heads[f]

    u = undirected_view(g)
    ukeys = np.repeat(np.arange(n, dtype=np.int64), np.diff(u.indptr)) * n + u.indices
    keys = b * n + j
    pos = np.searchsorted(ukeys, keys)
    adjacent = np.zeros(len(keys), dtype=bool)
    inb = pos < len(ukeys)
    adjacent[inb] = ukeys[pos[inb]] == keys[inb]
    bias = np.where(j == b, 1.0 / p, np.where(adjacent, 1.0, 1.0 / q))
    w = a.data[f] * bias
    row_tot = np.bincount(e_rep, weights=w, minlength=n_arcs)
    T = sp.csr_matrix((w / row_tot[e_rep], (e_rep, f)), shape=(n_arcs, n_arcs))

    P = transition_matrix(g, dangling).tocsr()
    X0 = sp.csr_matrix((P.data, (tails, np.arange(n_arcs))), shape=(n, n_arcs))
    H = sp.csr_matrix((np.ones(n_arcs), (np.arange(n_arcs), heads)), shape=(n_arcs, n))
    return T, X0, H


def fsmt_edge_state(g, length, p, q, dangling="self-loop"):
    """Exact ``Pi^(L,p,q)`` via the arc-state chain; O(L * N * |arcs|)."""
    length = _check_steps(length)
    T, X0, H = arc_transitions(g, p, q, dangling)
    y = X0.toarray()
    acc = np.asarray(H.T @ y.T).T
    for _ in range(length - 1):
        y = np.asarray((T.T @ y.T).T)
        acc += np.asarray(H.T @ y.T).T
    return ProximityMatrix(acc, "fsmt", {"L": length, "p": p, "q": q, "dangling": dangling})


# -- random-walk estimators ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VisitCounts:
    """Visit counts ``S[i, j]`` summed over ``trials`` walks from each ``i``."""

    counts: sp.csr_matrix
    trials: int
    walk_length: int
    seed: int
    trial_offset: int = 0
    p: float = 1.0
    q: float = 1.0

    def estimate(self):
        kind = "estimated-fst" if (self.p, self.q) == (1.0, 1.0) else "estimated-fsmt"
        vals = self.counts.astype(np.float64) / self.trials
        return ProximityMatrix(vals, kind, {"L": self.walk_length, "m": self.trials,
                                            "p": self.p, "q": self.q})


def trajectories_to_counts(starts, traj, n):
    """Sum trajectory visits into a CSR count matrix with rows = start nodes."""
    s = np.repeat(np.asarray(starts, dtype=np.int64), traj.shape[1] * traj.shape[2])
    c = traj.reshape(-1)
    live = c >= 0
    ones = np.ones(int(live.sum()), dtype=np.int64)
    m = sp.coo_matrix((ones, (s[live], c[live])), shape=(n, n)).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def _simulate(g, length, trials, seed, dangling, trial_offset, backend, p, q, max_block):
    length = _check_steps(length)
    if int(trials) != trials or trials < 1:
        raise ParameterError(f"trials must be a positive integer, got {trials}")
    trials = int(trials)
    k = kernels.get_kernels(backend)
    a = effective_adjacency(g, dangling)
    n = g.n
    indptr = a.indptr.astype(np.int64)
    indices = a.indices.astype(np.int64)
    data = a.data.astype(np.float64)
    cum = k["cumsum"](indptr, data)
    key = np.uint64(rng.seed_key(seed))
    memory = (p, q) != (1.0, 1.0)
    if memory:
        u = undirected_view(g)
        uindptr = u.indptr.astype(np.int64)
        uindices = u.indices.astype(np.int64)

    per_start = trials * length
    chunk = max(1, max_block // per_start)
    total = sp.csr_matrix((n, n), dtype=np.int64)
    parts = []
    for c0 in range(0, n, chunk):
        starts = np.arange(c0, min(n, c0 + chunk), dtype=np.int64)
        if memory:
            traj = k["second"](indptr, indices, data, cum, uindptr, uindices, starts,
                               trials, trial_offset, length, key, 1.0 / p, 1.0 / q)
        else:
            traj = k["first"](indptr, indices, cum, starts, trials, trial_offset, length, key)
        parts.append(trajectories_to_counts(starts - c0, traj, n)[: len(starts)])
    if parts:
        total = sp.vstack(parts, format="csr")
    total.sort_indices()
    return VisitCounts(total, trials, length, seed, trial_offset, float(p), float(q))


def fst_walk_estimate(g, length, trials, seed=42, dangling="self-loop",
                      trial_offset=0, backend=None, max_block=1 << 22):
    """Visit counts of ``trials`` first-order L-step walks from every node.

    Walk ``t`` from node ``i`` is driven by the random stream keyed on
    ``(seed, i, trial_offset + t)``, so disjoint trial ranges are
    independent and results do not depend on chunking or thread count.
    """
    return _simulate(g, length, trials, seed, dangling, trial_offset, backend,
                     1.0, 1.0, max_block)


def fsmt_walk_estimate(g, length, trials, p, q, seed=42, dangling="self-loop",
                       trial_offset=0, backend=None, max_block=1 << 22):
    """Visit counts of second-order (memory) walks.

    The first step is first order. Afterwards, from ``c`` having arrived
    from ``b``, neighbour ``j`` has weight ``A[c, j] / p`` if ``j == b``,
    ``A[c, j]`` if ``j`` is adjacent to ``b``, and ``A[c, j] / q``
    otherwise. With ``p == q == 1`` the trajectories are exactly those of
    :func:`fst_walk_estimate` for the same seed.
    """
    _check_memory(p, q)
    return _simulate(g, length, trials, seed, dangling, trial_offset, backend,
                     float(p), float(q), max_block)
