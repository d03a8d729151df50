import io
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from gemd.eval import (ExperimentConfig, LabelError, LabelSet, SkippedLabelWarning, f1_scores,
                       fit_binary_logreg, load_labels, predict_multilabel, run_experiment,
                       sweep_points, train_ovr_logreg, write_table)
from gemd.synthetic import sbm
from gemd.ultimatewalk import WalkConfig, embed


def oracle_logreg(X, y, reg):
    """Same objective minimized by BFGS from scipy."""
    n, d = X.shape
    s = np.where(y, 1.0, -1.0)

    def f(t):
        z = s * (X @ t[:d] + t[d])
        return np.mean(np.logaddexp(0.0, -z)) + 0.5 * reg * t[:d] @ t[:d]

    def grad(t):
        z = s * (X @ t[:d] + t[d])
        r = -s / (1.0 + np.exp(z)) / n
        return np.concatenate([X.T @ r + reg * t[:d], [r.sum()]])

    res = minimize(f, np.zeros(d + 1), jac=grad, method="BFGS", options={"gtol": 1e-12, "maxiter": 10_000})
    return res.x[:d], res.x[d]


def naive_f1(true, pred):
    per, TP, FP, FN = [], 0, 0, 0
    for c in range(true.shape[1]):
        tp = fp = fn = 0
        for i in range(true.shape[0]):
            tp += bool(true[i, c] and pred[i, c])
            fp += bool(pred[i, c] and not true[i, c])
            fn += bool(true[i, c] and not pred[i, c])
        per.append(2 * tp / (2 * tp + fp + fn) if tp + fp + fn else 0.0)
        TP, FP, FN = TP + tp, FP + fp, FN + fn
    return sum(per) / len(per), (2 * TP / (2 * TP + FP + FN) if TP + FP + FN else 0.0)


# -- logistic regression -------------------------------------------------------------

@given(st.integers(0, 10_000), st.sampled_from([0.01, 0.1, 1.0]))
def test_logreg_matches_bfgs_oracle(seed, reg):
    r = np.random.default_rng(seed)
    n, d = int(r.integers(10, 60)), int(r.integers(1, 6))
    X = r.standard_normal((n, d))
    y = r.random(n) < 1 / (1 + np.exp(-(X @ r.standard_normal(d))))
    if y.all() or not y.any():
        y[0] = not y[0]
    w, b = fit_binary_logreg(X, y, reg, gtol=1e-12)
    ow, ob = oracle_logreg(X, y, reg)
    np.testing.assert_allclose(w, ow, atol=1e-6)
    assert b == pytest.approx(ob, abs=1e-6)


def test_separable_data_is_fitted():
    X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    y = np.array([False, False, True, True])
    w, b = fit_binary_logreg(X, y, reg=1e-3)
    assert np.all((X @ w + b > 0) == y)


def test_duplicating_samples_changes_nothing():
    r = np.random.default_rng(1)
    X = r.standard_normal((30, 3))
    y = r.random(30) < 0.4
    w1, b1 = fit_binary_logreg(X, y)
    w2, b2 = fit_binary_logreg(np.vstack([X, X]), np.concatenate([y, y]))
    np.testing.assert_allclose(w1, w2, atol=1e-6)
    assert b1 == pytest.approx(b2, abs=1e-6)


def test_label_without_positives_is_skipped():
    X = np.random.default_rng(2).standard_normal((10, 2))
    Y = np.zeros((10, 3), dtype=bool)
    Y[:5, 0] = Y[5:, 1] = True
    with pytest.warns(SkippedLabelWarning):
        model = train_ovr_logreg(X, Y)
    assert list(model.trained) == [True, True, False]
    assert not predict_multilabel(model, X, np.full(10, 2))[:, 2].any()


def test_feature_validation():
    Y = np.array([[True, False], [False, True]])
    with pytest.raises(ValueError, match="non-finite"):
        train_ovr_logreg(np.array([[np.nan], [1.0]]), Y)


# -- prediction and scoring ------------------------------------------------------------

def test_top_k_with_ties():
    prob = np.array([[0.5, 0.5, 0.1], [0.2, 0.9, 0.9], [0.3, 0.2, 0.1]])
    pred = predict_multilabel(prob, None, [1, 1, 2])
    np.testing.assert_array_equal(pred, [[1, 0, 0], [0, 1, 0], [1, 1, 0]])
    with pytest.raises(ValueError):
        predict_multilabel(prob, None, [0, 1, 1])


def test_f1_examples():
    t = np.array([[1, 0], [0, 1], [1, 0]], dtype=bool)
    assert f1_scores(t, t) == (1.0, 1.0)
    assert f1_scores(t, ~t) == (0.0, 0.0)
    p = np.array([[1, 0], [1, 0], [1, 0]], dtype=bool)
    macro, micro = f1_scores(t, p)
    assert macro == pytest.approx((0.8 + 0.0) / 2)
    assert micro == pytest.approx(2 / 3)


@given(st.integers(0, 10_000))
def test_f1_matches_naive_oracle_and_is_permutation_invariant(seed):
    r = np.random.default_rng(seed)
    n, c = int(r.integers(1, 30)), int(r.integers(1, 6))
    t, p = r.random((n, c)) < 0.3, r.random((n, c)) < 0.3
    got = f1_scores(t, p)
    want = naive_f1(t, p)
    assert got[0] == pytest.approx(want[0], abs=1e-12)
    assert got[1] == pytest.approx(want[1], abs=1e-12)
    perm = r.permutation(n)
    assert f1_scores(t[perm], p[perm]) == got


# -- labels ------------------------------------------------------------------------

def test_load_labels(tmp_path):
    path = tmp_path / "labels.tsv"
    path.write_text("# node labels\na\tx,y\nc\ty\n", encoding="utf-8")
    labs = load_labels(path, ("a", "b", "c"))
    assert labs.names == ("x", "y")
    assert labs.labels == (frozenset({0, 1}), frozenset(), frozenset({1}))
    np.testing.assert_array_equal(labs.labeled, [True, False, True])
    path.write_text("a\tx\nzz\ty\n", encoding="utf-8")
    with pytest.raises(LabelError, match=":2:"):
        load_labels(path, ("a", "b"))


def test_label_ids_validated():
    with pytest.raises(LabelError):
        LabelSet((frozenset({3}),), ("a",))


# -- experiments ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def blocks():
    g, block = sbm([50] * 4, 0.1, 0.01, seed=42)
    return g, block, LabelSet.from_blocks(block)


def test_one_hot_features_classify_well(blocks):
    _, block, labels = blocks
    X = np.eye(4)[block]
    assert run_experiment(None, labels, X).micro_mean >= 0.95


def test_zero_features_do_no_better_than_prior(blocks):
    _, block, labels = blocks
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = run_experiment(None, labels, np.zeros((len(block), 3)))
    assert rep.micro_mean <= 0.3


def test_two_block_sbm_embedding_classifies():
    g, block = sbm([50, 50], 0.2, 0.02, seed=7)
    rep = run_experiment(g, LabelSet.from_blocks(block), lambda gr: embed(gr, WalkConfig(K=8), "closed"))
    assert rep.micro_mean >= 0.9


def test_experiment_is_reproducible(blocks):
    g, _, labels = blocks
    X = np.random.default_rng(0).standard_normal((g.n, 5))
    exp = ExperimentConfig(repeats=5)
    a, b = run_experiment(g, labels, X, exp), run_experiment(g, labels, X, exp)
    assert a.micro == b.micro and a.macro == b.macro
    assert "micro_f1=" in a.summary()


def test_experiment_validation(blocks):
    g, _, labels = blocks
    with pytest.raises(ValueError, match="rows"):
        run_experiment(g, labels, np.zeros((3, 2)))
    with pytest.raises(LabelError):
        run_experiment(None, LabelSet.from_blocks(np.zeros(5, int)), np.zeros((5, 2)))
    with pytest.raises(ValueError):
        ExperimentConfig(ratio=1.0)


def test_sweep_points_and_table():
    assert sweep_points("memory", [1, 2]) == [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (2.0, 2.0)]
    assert sweep_points("walk_length", ["3"]) == [3]
    with pytest.raises(ValueError):
        sweep_points("depth", [1])
    buf = io.StringIO()
    write_table([(0.5, 0.9, 0.01, 0.91, 0.02), ((1.0, 2.0), 0.8, 0.0, 0.8, 0.0)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "value\tmacro_mean\tmacro_sd\tmicro_mean\tmicro_sd"
    assert lines[1] == "0.5\t0.900000\t0.010000\t0.910000\t0.020000"
    assert lines[2].startswith("1,2\t")
