"""Weighted graphs, edge-list ingestion and the elementary matrices.

A :class:`Graph` stores its weighted adjacency as a CSR matrix with
sorted column indices; ``A[i, j]`` is the weight of the arc ``i -> j``.
Undirected graphs are stored as symmetric directed graphs.
"""
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .matrix import ProximityMatrix

DANGLING_POLICIES = ("self-loop", "zero-row")


class EdgeListError(ValueError):
    """Malformed edge-list line."""

    def __init__(self, path, lineno, message):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


@dataclass(frozen=True, eq=False)
class Graph:
    adjacency: sp.csr_matrix
    directed: bool = False
    node_ids: tuple = ()

    def __post_init__(self):
        a = self.adjacency
        if a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if a.nnz and (not np.all(np.isfinite(a.data)) or a.data.min() <= 0):
            raise ValueError("edge weights must be positive and finite")
        if self.node_ids and len(self.node_ids) != a.shape[0]:
            raise ValueError("node_ids length does not match node count")

    @property
    def n(self):
        return self.adjacency.shape[0]

    @property
    def n_arcs(self):
        return self.adjacency.nnz

    @property
    def n_edges(self):
        """Edge count: arcs for directed graphs, unordered pairs otherwise."""
        if self.directed:
            return self.adjacency.nnz
        a = self.adjacency
        loops = int(np.count_nonzero(a.diagonal()))
        return (a.nnz - loops) // 2 + loops

    @property
    def out_degree(self):
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    @property
    def ids(self):
        return self.node_ids if self.node_ids else tuple(str(i) for i in range(self.n))

    def neighbors(self, i):
        a = self.adjacency
        lo, hi = a.indptr[i], a.indptr[i + 1]
        return a.indices[lo:hi], a.data[lo:hi]

    def dense(self):
        return self.adjacency.toarray()


def from_edges(src, dst, weight=None, n=None, directed=False, node_ids=()):
    """Build a graph from integer arc arrays; duplicate arcs are summed."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    w = np.ones(len(src)) if weight is None else np.asarray(weight, dtype=np.float64)
    if n is None:
        n = int(max(src.max(initial=-1), dst.max(initial=-1)) + 1)
    if not directed:
        off = src != dst
        src, dst, w = (np.concatenate([src, dst[off]]),
                       np.concatenate([dst, src[off]]),
                       np.concatenate([w, w[off]]))
    a = sp.coo_matrix((w, (src, dst)), shape=(n, n)).tocsr()
    a.sum_duplicates()
    a.sort_indices()
    return Graph(a, directed=directed, node_ids=tuple(node_ids))


def from_dense(a, directed=None, node_ids=()):
    a = np.asarray(a, dtype=np.float64)
    if directed is None:
        directed = not np.array_equal(a, a.T)
    m = sp.csr_matrix(a)
    m.eliminate_zeros()
    m.sort_indices()
    return Graph(m, directed=directed, node_ids=tuple(node_ids))


def load_edge_list(path, directed=False):
    """Parse ``src dst [weight]`` lines (tab or space separated).

    Internal indices follow first appearance of the node identifiers.
    Lines starting with ``#`` are comments; a missing weight means 1.0.
    """
    index = {}
    src, dst, wts = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = text.split()
            if len(fields) not in (2, 3):
                raise EdgeListError(path, lineno, f"expected 2 or 3 fields, got {len(fields)}")
            w = 1.0
            if len(fields) == 3:
                try:
                    w = float(fields[2])
                except ValueError:
                    raise EdgeListError(path, lineno, f"non-numeric weight {fields[2]!r}") from None
                if not math.isfinite(w) or w <= 0:
                    raise EdgeListError(path, lineno, f"weight must be positive and finite, got {fields[2]}")
            for name in fields[:2]:
                if name not in index:
                    index[name] = len(index)
            src.append(index[fields[0]])
            dst.append(index[fields[1]])
            wts.append(w)
    return from_edges(src, dst, wts, n=len(index), directed=directed, node_ids=tuple(index))


def write_edge_list(g, path):
    """Serialize so that :func:`load_edge_list` reproduces the same
    weighted arcs by node id. Isolated nodes have no line and are lost."""
    a = g.adjacency.tocoo()
    ids = g.ids
    keep = np.ones(a.nnz, dtype=bool) if g.directed else a.row <= a.col
    order = np.lexsort((a.col[keep], a.row[keep]))
    rows, cols, vals = a.row[keep][order], a.col[keep][order], a.data[keep][order]
    with open(path, "w", encoding="utf-8") as fh:
        for r, c, v in zip(rows, cols, vals):
            fh.write(f"{ids[r]}\t{ids[c]}\t{float(v)!r}\n")


def effective_adjacency(g, dangling="self-loop"):
    """Adjacency actually walked on: dangling rows get a unit self-loop
    under the ``self-loop`` policy and stay empty under ``zero-row``."""
    if dangling not in DANGLING_POLICIES:
        raise ValueError(f"dangling policy must be one of {DANGLING_POLICIES}")
    a = g.adjacency
    if dangling == "zero-row":
        return a
    empty = np.flatnonzero(np.diff(a.indptr) == 0)
    if len(empty) == 0:
        return a
    loops = sp.csr_matrix((np.ones(len(empty)), (empty, empty)), shape=a.shape)
    out = (a + loops).tocsr()
    out.sort_indices()
    return out


def transition_matrix(g, dangling="self-loop"):
    """Row-stochastic ``P = D^-1 A`` (rows of dangling nodes per policy)."""
    if g.n < 1:
        raise ValueError("transition matrix of an empty graph")
    a = effective_adjacency(g, dangling)
    deg = np.asarray(a.sum(axis=1)).ravel()
    inv = np.zeros_like(deg)
    np.divide(1.0, deg, out=inv, where=deg > 0)
    p = sp.diags(inv) @ a
    p = p.tocsr()
    p.sort_indices()
    return ProximityMatrix(p, "transition", {"dangling": dangling})


def laplacian(g):
    """``L = D - A`` with out-degrees on the diagonal."""
    if g.n < 1:
        raise ValueError("laplacian of an empty graph")
    a = g.adjacency
    lap = (sp.diags(g.out_degree) - a).tocsr()
    lap.sort_indices()
    return ProximityMatrix(lap, "laplacian", {})


def adjacency_matrix(g):
    return ProximityMatrix(g.adjacency.copy(), "adjacency", {})


def undirected_view(g):
    """Symmetric 0/1 pattern of ``A + A^T`` (self-loops removed)."""
    a = g.adjacency
    u = ((a + a.T) > 0).astype(np.int8).tocsr()
    u.setdiag(0)
    u.eliminate_zeros()
    u.sort_indices()
    return u


def bfs_distances(pattern, source):
    """Hop distances from ``source``; unreachable nodes get -1."""
    d = csgraph.shortest_path(pattern, method="D", unweighted=True,
                              directed=False, indices=int(source))
    out = np.full(d.shape, -1, dtype=np.int64)
    fin = np.isfinite(d)
    out[fin] = d[fin].astype(np.int64)
    return out


def estimate_diameter(g, samples=8, seed=0):
    """Double-sweep lower bound on the unweighted undirected diameter.

    From each of ``samples`` random start nodes: BFS to the farthest node
    (lowest index on ties), BFS again from there, keep the largest depth.
    On disconnected graphs the value is the largest over the components
    that were visited. Exact on trees.
    """
    if g.n < 1:
        raise ValueError("diameter of an empty graph")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    pattern = undirected_view(g)
    rng = np.random.default_rng(seed)
    starts = rng.integers(0, g.n, size=samples)
    best = 0
    for s in starts:
        d = bfs_distances(pattern, s)
        far = int(np.argmax(d))
        d2 = bfs_distances(pattern, far)
        best = max(best, int(d[far]), int(d2.max()))
    return best


def exact_diameter(g):
    """Largest finite hop distance over all pairs (all-pairs BFS)."""
    if g.n < 1:
        raise ValueError("diameter of an empty graph")
    d = csgraph.shortest_path(undirected_view(g), method="D", unweighted=True, directed=False)
    return int(d[np.isfinite(d)].max())
