"""Synthetic graph families used by fixtures, ablations and benchmarks."""
import numpy as np

from .graph import from_edges


def sbm(sizes, p_in, p_out, seed=0, weights=None):
    """Undirected stochastic block model with planted blocks.

    Returns ``(graph, block)`` where ``block[i]`` is the block of node i.
    ``weights="lognormal"`` draws edge weights from LogNormal(0, 1).
    """
    rng = np.random.default_rng(seed)
    block = np.repeat(np.arange(len(sizes)), sizes)
    n = len(block)
    prob = np.where(block[:, None] == block[None, :], p_in, p_out)
    upper = np.triu(rng.random((n, n)) < prob, k=1)
    src, dst = np.nonzero(upper)
    w = _weights(rng, len(src), weights)
    return from_edges(src, dst, w, n=n, directed=False), block


def gnm(n, m, seed=0):
    """Uniform random undirected simple graph with ``n`` nodes and ``m`` edges."""
    if m > n * (n - 1) // 2:
        raise ValueError("too many edges for a simple graph")
    rng = np.random.default_rng(seed)
    keys = np.empty(0, dtype=np.int64)
    while len(keys) < m:
        need = int((m - len(keys)) * 1.1) + 16
        a = rng.integers(0, n, need)
        b = rng.integers(0, n, need)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        fresh = lo[lo != hi] * n + hi[lo != hi]
        keys = np.unique(np.concatenate([keys, fresh]))
    keys = rng.permutation(keys)[:m]
    return from_edges(keys // n, keys % n, n=n, directed=False)


def cliques(sizes, seed=0, weights=None):
    """Disjoint cliques; returns ``(graph, block)``."""
    rng = np.random.default_rng(seed)
    block = np.repeat(np.arange(len(sizes)), sizes)
    src, dst = np.nonzero(np.triu(block[:, None] == block[None, :], k=1))
    w = _weights(rng, len(src), weights)
    return from_edges(src, dst, w, n=len(block), directed=False), block


def path(n):
    return from_edges(np.arange(n - 1), np.arange(1, n), n=n, directed=False)


def complete(n):
    src, dst = np.nonzero(np.triu(np.ones((n, n), dtype=bool), k=1))
    return from_edges(src, dst, n=n, directed=False)


def star(leaves):
    return from_edges(np.zeros(leaves, dtype=np.int64), np.arange(1, leaves + 1),
                      n=leaves + 1, directed=False)


def random_tree(n, seed=0):
    """Uniform random recursive tree: node i attaches to a node < i."""
    rng = np.random.default_rng(seed)
    if n == 1:
        return from_edges([], [], n=1, directed=False)
    parents = np.array([rng.integers(0, i) for i in range(1, n)])
    return from_edges(parents, np.arange(1, n), n=n, directed=False)


def _weights(rng, count, kind):
    if kind is None:
        return np.ones(count)
    if kind == "lognormal":
        return rng.lognormal(0.0, 1.0, count)
    raise ValueError(f"unknown weight kind {kind!r}")
