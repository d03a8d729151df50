"""Minimizers of the two embedding losses.

* Warped Frobenius: ``|| F Fh^T - g^-1(Pi) ||_F^2`` is solved exactly by a
  rank-K truncated SVD, ``F = U S^1/2``, ``Fh = V S^1/2``.
* KL: row-normalized ``Pi`` against row-normalized ``g(F Fh^T)``,
  minimized by full-batch gradient descent.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.special import logsumexp

from .matrix import ParameterError, ProximityMatrix
from .warping import EXPONENTIAL, WarpSpec, unwarp, warp


class NumericalError(ArithmeticError):
    pass


class SvdConvergenceError(NumericalError):
    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"truncated SVD did not converge in {iterations} iterations "
                         f"(relative residual {residual:.3e})")


@dataclass(frozen=True, eq=False)
class EmbeddingPair:
    """Dual embeddings: ``F`` (N x K) and ``F_hat`` (N x K)."""

    F: np.ndarray
    F_hat: np.ndarray
    singular_values: np.ndarray = None

    @property
    def K(self):
        return self.F.shape[1]

    @property
    def n(self):
        return self.F.shape[0]

    def concat(self):
        """Per-node representation ``[f_i, fh_i]``."""
        return np.hstack([self.F, self.F_hat])

    def product(self):
        return self.F @ self.F_hat.T


# -- truncated SVD ------------------------------------------------------------

def _orth(y):
    q, _ = sla.qr(y, mode="economic", check_finite=False)
    return q


def truncated_svd(Z, k, oversample=8, n_iter=6, tol=1e-3, max_iter=300, seed=0):
    """Top-``k`` singular triplets by seeded randomized subspace iteration.

    Runs at least ``n_iter`` power iterations on a sketch of ``k +
    oversample`` columns, then continues until every top-``k`` Ritz value
    moves by less than ``tol`` relative to itself between iterations
    (values below ``1e-12 * sigma_1`` count as zero). Works on
    dense arrays and scipy sparse matrices alike. Each left singular
    vector is signed so that its largest-magnitude entry is positive.

    Returns ``(U, s, V)`` with ``s`` non-increasing.
    """
    m, n = Z.shape
    if not 1 <= k <= min(m, n):
        raise ParameterError(f"rank k={k} must lie in [1, {min(m, n)}]")
    width = min(k + oversample, min(m, n))
    rng = np.random.default_rng(seed)
    q = _orth(Z @ rng.standard_normal((n, width)))
    prev = None
    it = 0
    while True:
        w = np.asarray(Z.T @ q)  # B^T for B = Q^T Z
        ub, s, vbt = sla.svd(w.T, full_matrices=False, check_finite=False)
        it += 1
        if it > n_iter and prev is not None:
            scale = np.maximum(s[:k], 1e-12 * s[0])
            if np.all(np.abs(s[:k] - prev) <= tol * scale):
                break
        if it > max_iter:
            u = q @ ub[:, :k]
            v = vbt[:k].T
            resid = np.linalg.norm(np.asarray(Z @ v) - u * s[:k]) / max(s[0], np.finfo(float).tiny)
            raise SvdConvergenceError(max_iter, resid)
        prev = s[:k].copy()
        q = _orth(np.asarray(Z @ _orth(w)))
    u = q @ ub[:, :k]
    v = vbt[:k].T
    s = s[:k]
    idx = np.argmax(np.abs(u), axis=0)
    flip = np.sign(u[idx, np.arange(k)])
    flip[flip == 0] = 1.0
    return u * flip, s, v * flip


def factorize(Z, K, seed=0, **svd_kw):
    """Rank-K factors of a target matrix ``Z``: ``F = U S^1/2``, ``Fh = V S^1/2``."""
    u, s, v = truncated_svd(Z, K, seed=seed, **svd_kw)
    root = np.sqrt(s)
    return EmbeddingPair(u * root, v * root, s)


# -- warped Frobenius ------------------------------------------------------------

def _values(pi):
    return pi.values if isinstance(pi, ProximityMatrix) else pi


def form_target(pi, spec=EXPONENTIAL):
    """Dense ``Z = g^-1(Pi)`` on non-zero entries, ``spec.zero_fill()`` on
    zeros. For the exponential this is the clipped log: ``log Pi`` where
    ``Pi != 0`` and ``-c`` elsewhere."""
    if spec.family != "ibc":
        raise ParameterError("warped Frobenius solving needs an inverse Box-Cox warp")
    vals = _values(pi)
    dense = vals.toarray() if sp.issparse(vals) else np.array(vals, dtype=np.float64)
    if np.any(dense < 0):
        raise ParameterError("proximity matrix must be non-negative")
    nz = dense != 0
    z = np.full(dense.shape, spec.zero_fill())
    z[nz] = unwarp(spec, dense[nz])
    return z


def warped_frobenius_solve(pi, spec=EXPONENTIAL, K=64, seed=0, **svd_kw):
    """Closed-form minimizer of the warped Frobenius loss."""
    n = _values(pi).shape[0]
    if not 1 <= K <= n:
        raise ParameterError(f"embedding dimension K={K} must lie in [1, {n}]")
    return factorize(form_target(pi, spec), K, seed=seed, **svd_kw)


# -- KL loss ----------------------------------------------------------------------

def _row_normalized(pi):
    vals = _values(pi)
    dense = vals.toarray() if sp.issparse(vals) else np.asarray(vals, dtype=np.float64)
    rs = dense.sum(axis=1)
    bad = np.flatnonzero(~(rs > 0))
    if len(bad):
        raise ParameterError(f"row {bad[0]} of the proximity matrix has no positive mass")
    return dense / rs[:, None]


def _log_rows(S, spec):
    """Row-normalized ``log g(S)`` and the local slope factor
    ``d log g / dS`` pieces needed by the gradient."""
    if spec.family == "sigmoid":
        logy = -np.logaddexp(0.0, -S)
    elif spec.gamma == 0:
        logy = S
    else:
        logy = np.log(warp(spec, S))
    return logy - logsumexp(logy, axis=1, keepdims=True), logy


def _kl_from_logq(p, logq):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * (np.log(np.where(p > 0, p, 1.0)) - logq), 0.0)
    return float(terms.sum())


def kl_loss(pi, pair, spec=EXPONENTIAL):
    """``sum_i KL(Pi_i / |Pi_i| || Y_i / |Y_i|)`` with ``Y = g(F Fh^T)``."""
    p = _row_normalized(pi)
    logq, _ = _log_rows(pair.F @ pair.F_hat.T, spec)
    return _kl_from_logq(p, logq)


def kl_gradient(p, F, F_hat, spec=EXPONENTIAL):
    """Loss and gradients w.r.t. ``F`` and ``F_hat``; ``p`` row-normalized."""
    S = F @ F_hat.T
    logq, logy = _log_rows(S, spec)
    q = np.exp(logq)
    if spec.family == "sigmoid":
        slope = -np.expm1(logy)  # 1 - sigmoid(S)
    elif spec.gamma == 0:
        slope = 1.0
    else:
        slope = 1.0 / (1.0 + spec.gamma * S)
    G = (q - p) * slope
    return _kl_from_logq(p, logq), G @ F_hat, G.T @ F


@dataclass(frozen=True)
class KlDescentConfig:
    step: float = 1.0
    max_iter: int = 20_000
    tol: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step size must be positive")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def kl_descent(pi, spec=EXPONENTIAL, K=64, cfg=KlDescentConfig()):
    """Full-batch gradient descent on the KL loss.

    Starts from N(0, (0.1/sqrt K)^2) factors. A step that raises the loss
    is rejected and the step size halved; an accepted step grows it by
    10%. Stops when the relative loss decrease falls below ``cfg.tol``
    and returns the best iterate seen.
    """
    if not (spec.family == "sigmoid" or spec.gamma == 0):
        raise ParameterError("KL descent supports the exponential and sigmoid warps")
    p = _row_normalized(pi)
    n = p.shape[0]
    if not 1 <= K <= n:
        raise ParameterError(f"embedding dimension K={K} must lie in [1, {n}]")
    rng = np.random.default_rng(cfg.seed)
    scale = 0.1 / np.sqrt(K)
    F = rng.normal(0.0, scale, (n, K))
    H = rng.normal(0.0, scale, (n, K))
    loss, gF, gH = kl_gradient(p, F, H, spec)
    if not np.isfinite(loss):
        raise NumericalError("KL loss is not finite at initialization")
    step = cfg.step
    for it in range(cfg.max_iter):
        Fn = F - step * gF
        Hn = H - step * gH
        new, gFn, gHn = kl_gradient(p, Fn, Hn, spec)
        if not np.isfinite(new):
            raise NumericalError(f"KL loss diverged at iteration {it} (step size {step:.3g})")
        if new > loss:
            step *= 0.5
            if step < 1e-16:
                break
            continue
        rel = (loss - new) / max(loss, np.finfo(float).tiny)
        F, H, loss, gF, gH = Fn, Hn, new, gFn, gHn
        step *= 1.1
        if rel < cfg.tol:
            break
    return EmbeddingPair(F, H)
