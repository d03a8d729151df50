"""Known embedding methods as proximity / warp / loss triples."""
import math

import numpy as np
import pytest

from gemd.graph import transition_matrix
from gemd.proximity import fsmt_edge_state, fsmt_walk_estimate, fst, fst_walk_estimate
from gemd.solver import EmbeddingPair, KlDescentConfig, kl_descent, kl_loss, warped_frobenius_solve
from gemd.synthetic import sbm
from gemd.warping import EXPONENTIAL, LINEAR, SIGMOID

from conftest import random_graph


@pytest.fixture(scope="module")
def small():
    g, _ = sbm([6, 6], 0.7, 0.15, seed=3)
    return g


def skipgram_nll(counts, F, H):
    """Mean negative log-likelihood of each (start, visited) pair under a
    softmax over all nodes, by explicit loops."""
    n = len(counts)
    total, pairs = 0.0, 0.0
    for i in range(n):
        scores = [float(F[i] @ H[j]) for j in range(n)]
        top = max(scores)
        log_z = top + math.log(sum(math.exp(s - top) for s in scores))
        for j in range(n):
            if counts[i][j]:
                total -= counts[i][j] * (scores[j] - log_z)
                pairs += counts[i][j]
    return total, pairs


def entropy_rows(P):
    P = P / P.sum(axis=1, keepdims=True)
    return -float(np.sum(np.where(P > 0, P * np.log(np.where(P > 0, P, 1)), 0)))


def test_deepwalk_loss_is_skipgram_likelihood(small):
    v = fst_walk_estimate(small, 5, 40, seed=1)
    counts = v.counts.toarray().astype(float)
    r = np.random.default_rng(0)
    F, H = r.standard_normal((small.n, 3)), r.standard_normal((small.n, 3))
    nll, pairs = skipgram_nll(counts, F, H)
    # every row carries m L visits, so KL per row is nll / (m L) minus the row entropy
    want = nll / (40 * 5) - entropy_rows(counts)
    assert pairs == small.n * 40 * 5
    assert kl_loss(counts, EmbeddingPair(F, H), EXPONENTIAL) == pytest.approx(want, abs=1e-10)


def _descent_gap(pi_true, pi_est, K):
    best = kl_loss(pi_true, kl_descent(pi_true, EXPONENTIAL, K, KlDescentConfig(seed=1)))
    from_walks = kl_loss(pi_true, kl_descent(pi_est, EXPONENTIAL, K, KlDescentConfig(seed=1)))
    return best, from_walks


def test_deepwalk_triple_is_the_walk_limit(small):
    L = 5
    pi = fst(transition_matrix(small), L).toarray()
    est = fst_walk_estimate(small, L, 20_000, seed=2).estimate().toarray()
    best, from_walks = _descent_gap(pi, est, 4)
    assert from_walks - best < 1e-3


def test_node2vec_triple_is_the_walk_limit(small):
    L, p, q = 5, 0.25, 0.25
    pi = fsmt_edge_state(small, L, p, q).toarray()
    est = fsmt_walk_estimate(small, L, 20_000, p, q, seed=2).estimate().toarray()
    best, from_walks = _descent_gap(pi, est, 4)
    assert from_walks - best < 1e-3


def test_line_triple():
    g = random_graph(np.random.default_rng(4), 10, 0.4, weighted=True)
    P = transition_matrix(g)
    np.testing.assert_array_equal(fst(P, 1).toarray(), P.toarray())
    r = np.random.default_rng(5)
    F, H = r.standard_normal((10, 2)), r.standard_normal((10, 2))
    Pd = P.toarray()
    want = 0.0
    for i in range(10):
        y = 1 / (1 + np.exp(-(F[i] @ H.T)))
        q = y / y.sum()
        nz = Pd[i] > 0
        want += float(np.sum(Pd[i, nz] * np.log(Pd[i, nz] / q[nz])))
    assert kl_loss(P, EmbeddingPair(F, H), SIGMOID) == pytest.approx(want, abs=1e-10)
    start = kl_loss(P, EmbeddingPair(np.zeros((10, 3)), np.zeros((10, 3))), SIGMOID)
    fitted = kl_loss(P, kl_descent(P, SIGMOID, 3, KlDescentConfig(seed=0)), SIGMOID)
    assert fitted < 0.5 * start


def test_matrix_factorization_triple():
    g = random_graph(np.random.default_rng(6), 15, 0.3, weighted=True)
    A = g.dense()
    full = warped_frobenius_solve(A, LINEAR, K=15, tol=1e-10)
    np.testing.assert_allclose(1.0 + full.product(), A, atol=1e-9)
    for K in (1, 3, 6):
        pair = warped_frobenius_solve(A, LINEAR, K=K, tol=1e-10)
        s = np.linalg.svd(A - 1.0, compute_uv=False)
        err = np.linalg.norm(A - 1.0 - pair.product())
        assert err == pytest.approx(math.sqrt(float(np.sum(s[K:] ** 2))), rel=1e-6)
