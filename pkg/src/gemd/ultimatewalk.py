"""UltimateWalk: FST proximity, exponential warp, warped Frobenius loss.

Three routes to the same embedding:

* :func:`ultimatewalk_closed` factorizes the clipped log of the exact
  proximity matrix (dense, N <= ``closed_cap``).
* :func:`ultimatewalk_scalable` estimates the proximity by random walks
  and factorizes the sparse shifted log ``(log S/m + c)`` on the visited
  entries only.
* :func:`split_average` averages the shifted logs of T independent
  batches of walks before factorizing.
"""
import time
from dataclasses import asdict, dataclass, replace

import numpy as np
import scipy.sparse as sp

from .graph import estimate_diameter, transition_matrix
from .proximity import fsmt_edge_state, fsmt_walk_estimate, fst, fst_walk_estimate
from .solver import ParameterError, factorize, form_target
from .warping import WarpSpec, auto_gamma, unwarp

CLOSED_CAP = 20_000


@dataclass(frozen=True)
class WalkConfig:
    L: int = 7
    m: int = 50
    T: int = 1
    p: float = 1.0
    q: float = 1.0
    clip_c: float = 100.0
    seed: int = 42
    K: int = 64
    gamma: float = 0.0
    dangling: str = "self-loop"

    def __post_init__(self):
        if self.L < 1 or self.m < 1 or self.T < 1 or self.K < 1:
            raise ParameterError("L, m, T and K must all be >= 1")
        if self.m % self.T:
            raise ParameterError(f"split count T={self.T} must divide trials m={self.m}")
        if not (self.p > 0 and self.q > 0):
            raise ParameterError("memory factors p and q must be positive")
        if not self.clip_c > 0:
            raise ParameterError("clip constant c must be positive")

    @property
    def warp(self):
        return WarpSpec("ibc", self.gamma, self.clip_c)

    @property
    def memory(self):
        return (self.p, self.q) != (1.0, 1.0)

    def with_(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        return asdict(self)


def resolve_walk_length(g, value, seed=0):
    """``"auto"`` means the estimated diameter (at least 1)."""
    if value == "auto":
        return max(1, estimate_diameter(g, seed=seed))
    return int(value)


def resolve_gamma(g, cfg, value, mode="scalable", backend=None):
    """``"auto"`` picks the gamma that makes the unwarped proximity
    entries symmetric (exact entries in closed mode, walk estimates in
    scalable mode)."""
    if value != "auto":
        return float(value)
    if mode == "closed":
        vals = closed_proximity(g, cfg).nonzero_values()
    else:
        visits = _walks(g, cfg, cfg.m, 0, backend)
        vals = visits.counts.tocsr().data / visits.trials
    return auto_gamma(vals[vals > 0], seed=cfg.seed)


def _check_dims(g, cfg):
    if g.n == 0:
        raise ParameterError("cannot embed an empty graph")
    if g.n < cfg.K:
        raise ParameterError(f"graph has {g.n} nodes, fewer than the embedding dimension K={cfg.K}")


def closed_proximity(g, cfg):
    if cfg.memory:
        return fsmt_edge_state(g, cfg.L, cfg.p, cfg.q, cfg.dangling)
    return fst(transition_matrix(g, cfg.dangling), cfg.L)


def ultimatewalk_closed(g, cfg=WalkConfig(), cap=CLOSED_CAP):
    """Factorize ``Z = log Pi^(L)`` on the support and ``-c`` elsewhere."""
    _check_dims(g, cfg)
    if g.n > cap:
        raise ParameterError(f"graph has {g.n} nodes; the dense closed form is capped at "
                             f"{cap}. Use the scalable variant")
    z = form_target(closed_proximity(g, cfg), cfg.warp)
    return factorize(z, cfg.K, seed=cfg.seed)


def proxy_matrix(visits, spec):
    """Sparse ``g^-1(S/m) - zero_fill`` on the visited entries; for the
    exponential warp this is ``log(S/m) + c``."""
    counts = visits.counts.tocsr()
    est = counts.data.astype(np.float64) / visits.trials
    out = sp.csr_matrix((unwarp(spec, est) - spec.zero_fill(), counts.indices.copy(),
                         counts.indptr.copy()), shape=counts.shape)
    return out


def _walks(g, cfg, trials, trial_offset, backend=None):
    if cfg.memory:
        return fsmt_walk_estimate(g, cfg.L, trials, cfg.p, cfg.q, seed=cfg.seed,
                                  dangling=cfg.dangling, trial_offset=trial_offset,
                                  backend=backend)
    return fst_walk_estimate(g, cfg.L, trials, seed=cfg.seed, dangling=cfg.dangling,
                             trial_offset=trial_offset, backend=backend)


def split_proxies(g, cfg, backend=None):
    """Proxy matrices of the ``T`` splits. Split ``t`` owns trials
    ``[t m/T, (t+1) m/T)`` of every start node's random streams."""
    per = cfg.m // cfg.T
    return [proxy_matrix(_walks(g, cfg, per, t * per, backend), cfg.warp) for t in range(cfg.T)]


def averaged_proxy(g, cfg, backend=None):
    """Entrywise mean of the split proxies; entries missing from a split count as 0."""
    parts = split_proxies(g, cfg, backend)
    if len(parts) == 1:
        return parts[0]
    total = parts[0]
    for z in parts[1:]:
        total = total + z
    total = (total / cfg.T).tocsr()
    total.sort_indices()
    return total


def ultimatewalk_scalable(g, cfg=WalkConfig(), backend=None):
    """Random-walk estimate of UltimateWalk (split-averaged when T > 1)."""
    _check_dims(g, cfg)
    return factorize(averaged_proxy(g, cfg, backend), cfg.K, seed=cfg.seed)


def split_average(g, cfg, backend=None):
    """Data-splitting variant: average T shifted-log proxies, then factorize."""
    if cfg.m % cfg.T:
        raise ParameterError(f"split count T={cfg.T} must divide trials m={cfg.m}")
    return ultimatewalk_scalable(g, cfg, backend)


def mle_log_mean(samples, axis=0):
    """Maximum-likelihood estimate of the log-mean of log-normal samples."""
    return np.mean(np.log(np.asarray(samples, dtype=np.float64)), axis=axis)


def embed(g, cfg=WalkConfig(), mode="scalable", backend=None):
    if mode == "closed":
        return ultimatewalk_closed(g, cfg)
    if mode == "scalable":
        return ultimatewalk_scalable(g, cfg, backend)
    raise ParameterError(f"unknown mode {mode!r}")


def benchmark_scaling(sizes, cfg=WalkConfig(K=16), generator=None, degree=10,
                      repeats=3, seed=0, backend=None):
    """Wall time of the scalable pipeline on synthetic graphs.

    ``sizes`` are edge counts; by default each graph is a uniform random
    graph with ``2 |E| / degree`` nodes, so N/|E| is fixed. Reports the
    best of ``repeats`` runs after a warm-up on the smallest size, which
    also triggers JIT compilation.
    Returns a list of ``(edges, seconds)``.
    """
    from .synthetic import gnm

    sizes = [int(s) for s in sizes]
    if not sizes:
        return []
    if generator is None:
        def generator(n_edges, s):
            return gnm(max(cfg.K + 1, int(round(2 * n_edges / degree))), n_edges, seed=s)
    ultimatewalk_scalable(generator(min(sizes), seed), cfg, backend)
    rows = []
    for i, size in enumerate(sizes):
        g = generator(size, seed + i + 1)
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            ultimatewalk_scalable(g, cfg, backend)
            best = min(best, time.perf_counter() - t0)
        rows.append((g.n_edges, best))
    return rows


def loglog_fit(rows):
    """Least-squares slope and R^2 of log(seconds) against log(edges)."""
    x = np.log([r[0] for r in rows])
    y = np.log([r[1] for r in rows])
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)
