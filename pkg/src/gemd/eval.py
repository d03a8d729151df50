"""Multi-label node classification protocol.

A fraction of the labeled nodes is revealed for training, one-vs-rest
L2-regularized logistic regressions are fitted on their embeddings, and
each held-out node is assigned as many labels as it truly has (the
top-scoring ones). Scores are Macro and Micro F1, averaged over seeded
repeats.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit

from . import rng as _rng

# Penalty on the mean log-loss. 1.0 underfits 64-dimensional embeddings of a
# few hundred nodes badly enough that scores track raw feature scale.
DEFAULT_REG = 0.1


class LabelError(ValueError):
    pass


class SkippedLabelWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class LabelSet:
    """Per-node label sets over contiguous label ids ``0..label_count-1``."""

    labels: tuple
    names: tuple

    def __post_init__(self):
        for node_labels in self.labels:
            for lab in node_labels:
                if not 0 <= lab < len(self.names):
                    raise LabelError(f"label id {lab} out of range")

    @property
    def n(self):
        return len(self.labels)

    @property
    def label_count(self):
        return len(self.names)

    @property
    def labeled(self):
        return np.array([len(s) > 0 for s in self.labels], dtype=bool)

    def indicator(self):
        Y = np.zeros((self.n, self.label_count), dtype=bool)
        for i, s in enumerate(self.labels):
            Y[i, list(s)] = True
        return Y

    @classmethod
    def from_blocks(cls, block):
        block = np.asarray(block)
        names = tuple(str(b) for b in np.unique(block))
        lookup = {name: k for k, name in enumerate(names)}
        return cls(tuple(frozenset([lookup[str(b)]]) for b in block), names)


def load_labels(path, node_ids):
    """Read ``node<TAB>label1,label2,...`` lines aligned to ``node_ids``.

    Nodes absent from the file are unlabeled. Label ids follow first
    appearance.
    """
    index = {nid: i for i, nid in enumerate(node_ids)}
    names = {}
    sets = [set() for _ in node_ids]
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split(None, 1)
            if len(parts) != 2:
                raise LabelError(f"{path}:{lineno}: expected 'node<TAB>labels'")
            node, labs = parts
            if node not in index:
                raise LabelError(f"{path}:{lineno}: unknown node {node!r}")
            for lab in labs.replace(" ", "").split(","):
                if not lab:
                    continue
                if lab not in names:
                    names[lab] = len(names)
                sets[index[node]].add(names[lab])
    return LabelSet(tuple(frozenset(s) for s in sets), tuple(names))


# -- logistic regression ----------------------------------------------------

def logistic_objective(X, y, w, b, reg):
    """``mean log(1 + exp(-s z)) + reg/2 |w|^2`` with ``s = +-1``, ``z = Xw + b``."""
    s = np.where(y, 1.0, -1.0)
    return float(-np.mean(log_expit(s * (X @ w + b))) + 0.5 * reg * (w @ w))


def fit_binary_logreg(X, y, reg=DEFAULT_REG, gtol=1e-6, max_iter=100):
    """Newton's method with backtracking; the intercept is not penalized.

    Because the loss is an average, duplicating every sample leaves the
    solution unchanged.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    pen = np.full(d + 1, float(reg))
    pen[-1] = 0.0
    s = np.where(y, 1.0, -1.0)
    theta = np.zeros(d + 1)

    def obj(t):
        return -np.mean(log_expit(s * (Xa @ t))) + 0.5 * np.sum(pen * t * t)

    f = obj(theta)
    for _ in range(max_iter):
        z = Xa @ theta
        prob = expit(z)
        grad = Xa.T @ (prob - y) / n + pen * theta
        if np.linalg.norm(grad) < gtol:
            break
        curv = prob * (1.0 - prob)
        hess = (Xa.T * curv) @ Xa / n + np.diag(pen)
        hess[np.diag_indices_from(hess)] += 1e-12
        try:
            direction = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            direction = np.linalg.lstsq(hess, grad, rcond=None)[0]
        slope = grad @ direction
        t = 1.0
        while t > 1e-10:
            cand = theta - t * direction
            fc = obj(cand)
            if fc <= f - 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            break
        theta, f = cand, fc
    return theta[:d], float(theta[d])


@dataclass(frozen=True, eq=False)
class OvrModel:
    coef: np.ndarray       # (labels, d)
    intercept: np.ndarray  # (labels,)
    trained: np.ndarray    # (labels,) bool

    def predict_proba(self, X):
        prob = expit(np.asarray(X, dtype=np.float64) @ self.coef.T + self.intercept)
        prob[:, ~self.trained] = 0.0
        return prob


def train_ovr_logreg(X, Y, reg=DEFAULT_REG):
    """One binary logistic regression per label column of ``Y``.

    Labels with no positive training example are skipped (never
    predicted) and a :class:`SkippedLabelWarning` is issued.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=bool)
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values")
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError("features must be a 2-D array with at least one column")
    n_labels = Y.shape[1]
    coef = np.zeros((n_labels, X.shape[1]))
    icept = np.zeros(n_labels)
    trained = Y.any(axis=0)
    if not trained.all():
        warnings.warn(f"{int((~trained).sum())} label(s) have no training example",
                      SkippedLabelWarning, stacklevel=2)
    for c in np.flatnonzero(trained):
        coef[c], icept[c] = fit_binary_logreg(X, Y[:, c], reg)
    return OvrModel(coef, icept, trained)


def predict_multilabel(model, X, k_per_node):
    """Top-``k_i`` labels per node; on ties the lower label id wins."""
    prob = model.predict_proba(X) if hasattr(model, "predict_proba") else np.asarray(model)
    k = np.asarray(k_per_node, dtype=np.int64)
    if np.any(k < 1):
        raise ValueError("every node needs k >= 1")
    order = np.argsort(-prob, axis=1, kind="stable")
    pred = np.zeros(prob.shape, dtype=bool)
    rank = np.empty_like(order)
    rank[np.arange(len(order))[:, None], order] = np.arange(prob.shape[1])[None, :]
    pred[rank < k[:, None]] = True
    return pred


def f1_scores(true, pred):
    """``(macro_f1, micro_f1)``; a label with no true and no predicted
    instance scores F1 = 0 in the macro mean."""
    true = np.asarray(true, dtype=bool)
    pred = np.asarray(pred, dtype=bool)
    tp = np.sum(true & pred, axis=0).astype(np.float64)
    fp = np.sum(~true & pred, axis=0).astype(np.float64)
    fn = np.sum(true & ~pred, axis=0).astype(np.float64)
    den = 2 * tp + fp + fn
    per = np.divide(2 * tp, den, out=np.zeros_like(tp), where=den > 0)
    macro = float(per.mean()) if len(per) else 0.0
    TP, FP, FN = tp.sum(), fp.sum(), fn.sum()
    micro = float(2 * TP / (2 * TP + FP + FN)) if (2 * TP + FP + FN) > 0 else 0.0
    return macro, micro


# -- experiments ------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    ratio: float = 0.5
    repeats: int = 20
    seed: int = 42
    reg: float = DEFAULT_REG

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise ValueError("labeling ratio must lie in (0, 1)")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


@dataclass(frozen=True)
class ExperimentReport:
    macro: tuple
    micro: tuple
    skipped_labels: int = 0
    config: ExperimentConfig = field(default_factory=ExperimentConfig)

    @staticmethod
    def _sd(v):
        return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0

    @property
    def macro_mean(self):
        return float(np.mean(self.macro))

    @property
    def micro_mean(self):
        return float(np.mean(self.micro))

    @property
    def macro_sd(self):
        return self._sd(self.macro)

    @property
    def micro_sd(self):
        return self._sd(self.micro)

    def summary(self):
        return (f"ratio={self.config.ratio:g} repeats={len(self.micro)} "
                f"macro_f1={self.macro_mean:.4f}+-{self.macro_sd:.4f} "
                f"micro_f1={self.micro_mean:.4f}+-{self.micro_sd:.4f} "
                f"skipped_labels={self.skipped_labels}")


def features_of(embedding):
    if hasattr(embedding, "concat"):
        return embedding.concat()
    return np.asarray(embedding, dtype=np.float64)


def run_experiment(g, labels, embed, exp=ExperimentConfig()):
    """Score an embedding on repeated random train/test splits.

    ``embed`` is a callable ``embed(g)`` returning an embedding (pair or
    array), or an already computed embedding. ``g`` may be None when the
    embedding is given.
    """
    if labels.label_count < 2:
        raise LabelError("classification needs at least two distinct labels")
    X = features_of(embed(g) if callable(embed) else embed)
    if X.shape[0] != labels.n:
        raise ValueError(f"embedding has {X.shape[0]} rows but labels cover {labels.n} nodes")
    Y = labels.indicator()
    nodes = np.flatnonzero(labels.labeled)
    n_train = int(round(exp.ratio * len(nodes)))
    n_train = min(max(n_train, 1), len(nodes) - 1)
    macro, micro = [], []
    skipped = 0
    for r in range(exp.repeats):
        gen = np.random.default_rng(_rng.derive_seed(exp.seed, r))
        perm = gen.permutation(nodes)
        tr, te = np.sort(perm[:n_train]), np.sort(perm[n_train:])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", SkippedLabelWarning)
            model = train_ovr_logreg(X[tr], Y[tr], exp.reg)
        skipped += int((~model.trained).sum()) if caught else 0
        pred = predict_multilabel(model, X[te], Y[te].sum(axis=1))
        ma, mi = f1_scores(Y[te], pred)
        macro.append(ma)
        micro.append(mi)
    return ExperimentReport(tuple(macro), tuple(micro), skipped, exp)


AXES = ("walk_length", "gamma", "memory")


def sweep_points(axis, grid):
    """Grid points of an ablation axis; the memory axis takes the
    Cartesian product of ``grid`` with itself as (p, q) pairs unless
    pairs are given."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    grid = list(grid)
    if not grid:
        raise ValueError("empty sweep grid")
    if axis == "memory":
        if all(np.ndim(v) == 1 and len(v) == 2 for v in grid):
            return [(float(p), float(q)) for p, q in grid]
        return [(float(p), float(q)) for p in grid for q in grid]
    if axis == "walk_length":
        return [int(v) for v in grid]
    return [float(v) for v in grid]


def ablation_sweep(axis, grid, g, labels, cfg, exp=ExperimentConfig(), mode="closed"):
    """Run :func:`run_experiment` at each grid point with all else fixed.

    Returns rows ``(value, macro_mean, macro_sd, micro_mean, micro_sd)``.
    """
    from .ultimatewalk import embed as uw_embed

    rows = []
    for point in sweep_points(axis, grid):
        if axis == "walk_length":
            c = cfg.with_(L=point)
        elif axis == "gamma":
            c = cfg.with_(gamma=point)
        else:
            c = cfg.with_(p=point[0], q=point[1])
        rep = run_experiment(g, labels, lambda gr, c=c: uw_embed(gr, c, mode), exp)
        rows.append((point, rep.macro_mean, rep.macro_sd, rep.micro_mean, rep.micro_sd))
    return rows


def format_value(v):
    if isinstance(v, tuple):
        return ",".join(f"{x:g}" for x in v)
    return f"{v:g}"


def write_table(rows, fh, header=("value", "macro_mean", "macro_sd", "micro_mean", "micro_sd")):
    fh.write("\t".join(header) + "\n")
    for row in rows:
        cells = [format_value(row[0])] + [f"{x:.6f}" if isinstance(x, float) else str(x)
                                          for x in row[1:]]
        fh.write("\t".join(cells) + "\n")
