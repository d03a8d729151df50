import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from gemd.eval import ExperimentConfig, LabelSet, run_experiment
from gemd.graph import estimate_diameter, transition_matrix
from gemd.proximity import ParameterError, fst, fst_walk_estimate
from gemd.solver import factorize, form_target, truncated_svd
from gemd.synthetic import cliques, path, sbm
from gemd.ultimatewalk import (WalkConfig, averaged_proxy, benchmark_scaling, closed_proximity,
                               embed, loglog_fit, mle_log_mean, proxy_matrix, resolve_gamma,
                               resolve_walk_length, split_average, split_proxies,
                               ultimatewalk_closed, ultimatewalk_scalable)
from gemd.warping import WarpSpec, auto_gamma, unwarp

from conftest import random_graph


def span(M, k):
    return truncated_svd(M, k, tol=1e-10)[0]


def max_angle(a, b):
    return float(np.degrees(sla.subspace_angles(a, b).max()))


@pytest.fixture(scope="module")
def three_blocks():
    g, _ = sbm([10, 10, 10], 0.6, 0.1, seed=42)
    return g


# -- configuration ---------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ParameterError, match="divide"):
        WalkConfig(m=10, T=3)
    for bad in (dict(L=0), dict(m=0), dict(K=0), dict(p=0.0), dict(q=-1.0), dict(clip_c=0.0)):
        with pytest.raises(ParameterError):
            WalkConfig(**bad)


def test_dimension_and_mode_errors():
    with pytest.raises(ParameterError, match="K=4"):
        ultimatewalk_closed(path(3), WalkConfig(K=4))
    with pytest.raises(ParameterError, match="scalable"):
        ultimatewalk_closed(path(12), WalkConfig(K=2), cap=10)
    with pytest.raises(ParameterError):
        embed(path(5), WalkConfig(K=2), mode="hybrid")


def test_resolve_walk_length_and_gamma():
    assert resolve_walk_length(path(5), "auto") == estimate_diameter(path(5)) == 4
    assert resolve_walk_length(path(5), "3") == 3
    g, _ = sbm([10, 10], 0.5, 0.1, seed=1)
    cfg = WalkConfig(K=2)
    assert resolve_gamma(g, cfg, "-0.5") == -0.5
    want = auto_gamma(closed_proximity(g, cfg).nonzero_values(), seed=cfg.seed)
    assert resolve_gamma(g, cfg, "auto", mode="closed") == want
    assert -1.0 <= resolve_gamma(g, cfg, "auto") <= 1.0


# -- closed form ---------------------------------------------------------------------

def test_two_cliques_separate():
    g, block = cliques([5, 5], seed=0)
    X = ultimatewalk_closed(g, WalkConfig(K=2)).concat()
    d = np.linalg.norm(X[:, None] - X[None], axis=2)
    same = block[:, None] == block[None]
    off = ~np.eye(len(X), dtype=bool)
    assert d[same & off].max() < d[~same].min()


def test_full_rank_closed_form_is_exact():
    g = random_graph(np.random.default_rng(1), 9, 0.5)
    cfg = WalkConfig(K=9, L=3)
    pair = ultimatewalk_closed(g, cfg)
    z = form_target(closed_proximity(g, cfg))
    assert np.linalg.norm(pair.product() - z) < 1e-6 * np.linalg.norm(z)


def test_unit_memory_is_first_order_bit_for_bit():
    g = random_graph(np.random.default_rng(2), 25, 0.2, weighted=True)
    cfg = WalkConfig(K=5, p=1.0, q=1.0)
    a = ultimatewalk_closed(g, cfg)
    b = factorize(form_target(fst(transition_matrix(g), cfg.L)), cfg.K, seed=cfg.seed)
    np.testing.assert_array_equal(a.F, b.F)
    np.testing.assert_array_equal(a.F_hat, b.F_hat)


# -- scalable -------------------------------------------------------------------------

@given(st.integers(0, 10_000), st.sampled_from([0.0, 0.5, -0.5]))
def test_proxy_support_rule(seed, gam):
    r = np.random.default_rng(seed)
    g = random_graph(r, int(r.integers(3, 25)), 0.2)
    v = fst_walk_estimate(g, 3, 4, seed=seed)
    spec = WarpSpec("ibc", gam)
    z = proxy_matrix(v, spec)
    counts = v.counts.toarray()
    want = np.where(counts > 0, unwarp(spec, np.maximum(counts, 1) / 4) - spec.zero_fill(), 0.0)
    np.testing.assert_allclose(z.toarray(), want, rtol=1e-13, atol=1e-12)
    if gam == 0:
        nz = counts > 0
        np.testing.assert_allclose(z.toarray()[nz], np.log(counts[nz] / 4) + 100, rtol=1e-14)


@given(st.integers(0, 10_000))
def test_proxy_rows_are_sparse(seed):
    r = np.random.default_rng(seed)
    g = random_graph(r, int(r.integers(5, 60)), 0.3)
    cfg = WalkConfig(L=2, m=3, K=1, seed=seed)
    nnz = np.diff(averaged_proxy(g, cfg).indptr)
    assert np.all(nnz <= min(g.n, cfg.L * cfg.m))


def test_scalable_is_deterministic(three_blocks):
    cfg = WalkConfig(K=4, m=20)
    a, b = ultimatewalk_scalable(three_blocks, cfg), ultimatewalk_scalable(three_blocks, cfg)
    np.testing.assert_array_equal(a.F, b.F)
    np.testing.assert_array_equal(a.F_hat, b.F_hat)


def test_single_split_is_the_scalable_run(three_blocks):
    cfg = WalkConfig(K=4, m=20, T=1)
    a, b = split_average(three_blocks, cfg), ultimatewalk_scalable(three_blocks, cfg)
    np.testing.assert_array_equal(a.F, b.F)


def test_splits_partition_the_trials(three_blocks):
    cfg = WalkConfig(K=3, m=20, T=4, L=3)
    parts = split_proxies(three_blocks, cfg)
    for t, z in enumerate(parts):
        v = fst_walk_estimate(three_blocks, 3, 5, seed=cfg.seed, trial_offset=5 * t)
        assert (z != proxy_matrix(v, cfg.warp)).nnz == 0
    avg = averaged_proxy(three_blocks, cfg).toarray()
    np.testing.assert_allclose(avg, sum(z.toarray() for z in parts) / 4, rtol=1e-14)


def test_many_trials_recover_the_closed_subspace(three_blocks):
    K = 3
    cfg = WalkConfig(K=K, m=50_000)
    z = form_target(closed_proximity(three_blocks, cfg))
    zt = averaged_proxy(three_blocks, cfg)
    support = zt.copy()
    support.data[:] = 1.0
    assert max_angle(span(z, K), span((zt - cfg.clip_c * support).toarray(), K)) < 5.0


def _split_distances(g, m, T, seeds=20, K=3):
    oracle = span(form_target(closed_proximity(g, WalkConfig(K=K))) + 100.0, K)
    out = []
    for s in range(seeds):
        z = averaged_proxy(g, WalkConfig(K=K, m=m, T=T, seed=s)).toarray()
        out.append(math.sin(math.radians(max_angle(oracle, span(z, K)))))
    return float(np.median(out))


@pytest.mark.xfail(strict=True, reason="averaging split logs adds Jensen bias and hole noise; "
                                      "a single split is closer at this trial budget")
def test_four_splits_beat_one_at_equal_budget(three_blocks):
    assert _split_distances(three_blocks, 200, 4) <= _split_distances(three_blocks, 200, 1)


def test_four_splits_match_one_when_fully_sampled(three_blocks):
    one, four = _split_distances(three_blocks, 2000, 1), _split_distances(three_blocks, 2000, 4)
    assert four <= 1.05 * one


def test_log_mean_estimator():
    x = np.random.default_rng(3).lognormal(1.5, 0.7, (64, 500))
    np.testing.assert_allclose(mle_log_mean(x), np.log(x).mean(axis=0), rtol=1e-15)
    errs = [np.sqrt(np.mean((mle_log_mean(x[:T]) - 1.5) ** 2)) for T in (1, 4, 16, 64)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


@pytest.fixture(scope="module")
def labeled_sbm():
    g, block = sbm([50] * 4, 0.1, 0.01, seed=42)
    return g, LabelSet.from_blocks(block)


def _micro(g, labels, mode, **kw):
    exp = ExperimentConfig(ratio=0.5, repeats=20)
    return run_experiment(g, labels, embed(g, WalkConfig(K=64, **kw), mode), exp).micro_mean


def test_scalable_f1_converges_to_closed_form(labeled_sbm):
    g, labels = labeled_sbm
    closed = _micro(g, labels, "closed")
    assert abs(_micro(g, labels, "scalable", m=10_000) - closed) <= 0.03


@pytest.mark.xfail(strict=True, reason="with most entries visited, each unvisited one is a "
                                      "spike of size c in the proxy and swamps the trailing spectrum")
def test_scalable_f1_close_at_five_hundred_trials(labeled_sbm):
    g, labels = labeled_sbm
    closed = _micro(g, labels, "closed")
    assert abs(_micro(g, labels, "scalable", m=500) - closed) <= 0.03


# -- benchmark -----------------------------------------------------------------------

def test_benchmark_helpers():
    assert benchmark_scaling([]) == []
    rows = benchmark_scaling([400, 800], cfg=WalkConfig(K=4, m=5, L=3), repeats=1)
    assert [r[0] for r in rows] == [400, 800]
    assert all(r[1] > 0 for r in rows)
    slope, r2 = loglog_fit([(10, 1.0), (100, 10.0), (1000, 100.0)])
    assert slope == pytest.approx(1.0) and r2 == pytest.approx(1.0)
