"""Warping functions linking embedding inner products to proximities.

The inverse Box-Cox family ``(1 + gamma x)^(1/gamma)`` (``exp(x)`` at
``gamma = 0``) and the logistic sigmoid. Also: skewness of a sample and
an automatic choice of ``gamma`` that makes the unwarped proximities
symmetric.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np

DEFAULT_CLIP_C = 100.0
DEFAULT_SAMPLE_SIZE = 100_000
# below this the family equals exp to double precision; smaller gammas underflow
_TINY_GAMMA = 1e-150


class WarpDomainError(ValueError):
    pass


class SkewnessError(ValueError):
    pass


class GammaBracketWarning(UserWarning):
    """Skewness has no sign change on [-1, 1]; an endpoint was returned."""


@dataclass(frozen=True)
class WarpSpec:
    family: str = "ibc"
    gamma: float = 0.0
    clip_c: float = DEFAULT_CLIP_C

    def __post_init__(self):
        if self.family not in ("ibc", "sigmoid"):
            raise ValueError(f"unknown warp family {self.family!r}")
        if not self.clip_c > 0:
            raise ValueError(f"clip_c must be positive, got {self.clip_c}")
        if not math.isfinite(self.gamma):
            raise ValueError("gamma must be finite")

    @property
    def is_exponential(self):
        return self.family == "ibc" and self.gamma == 0

    def zero_fill(self):
        """Value standing in for ``unwarp(0)``: unwarp of the smallest
        positive double, floored at ``-clip_c`` (exactly ``-clip_c`` for
        the exponential)."""
        if self.family != "ibc":
            raise WarpDomainError("zero fill is only defined for the inverse Box-Cox family")
        with np.errstate(over="ignore"):
            v = float(unwarp(self, np.array([np.nextafter(0.0, 1.0)]))[0])
        return max(v, -self.clip_c)


EXPONENTIAL = WarpSpec("ibc", 0.0)
LINEAR = WarpSpec("ibc", 1.0)
SIGMOID = WarpSpec("sigmoid")


def warp(spec, x):
    """Apply ``g`` element-wise."""
    x = np.asarray(x, dtype=np.float64)
    if spec.family == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * x))
    gam = spec.gamma
    if abs(gam) < _TINY_GAMMA:
        return np.exp(x)
    base = 1.0 + gam * x
    bad = ~(base > 0)
    if np.any(bad):
        first = x[bad].flat[0]
        raise WarpDomainError(f"ibc(gamma={gam}) undefined at x={first}: requires 1 + gamma*x > 0")
    # log1p keeps tiny gamma accurate, where base ** (1 / gamma) collapses to 1
    return np.exp(np.log1p(gam * x) / gam)


def unwarp(spec, y):
    """Apply ``g^-1`` element-wise."""
    y = np.asarray(y, dtype=np.float64)
    if spec.family == "sigmoid":
        bad = ~((y > 0) & (y < 1))
        if np.any(bad):
            raise WarpDomainError(f"sigmoid inverse undefined at y={y[bad].flat[0]}")
        return np.log(y) - np.log1p(-y)
    bad = ~(y > 0)
    if np.any(bad):
        raise WarpDomainError(f"ibc(gamma={spec.gamma}) inverse undefined at y={y[bad].flat[0]}")
    gam = spec.gamma
    if abs(gam) < _TINY_GAMMA:
        return np.log(y)
    return np.expm1(gam * np.log(y)) / gam


def skewness(samples):
    """Population skewness ``E[(x - mu)^3] / sigma^3``."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if len(x) < 3:
        raise SkewnessError("skewness needs at least 3 samples")
    d = x - x.mean()
    m2 = np.mean(d * d)
    if not m2 > 0 or m2 <= (np.finfo(float).eps * max(1.0, np.abs(x).max())) ** 2:
        raise SkewnessError("skewness undefined for constant samples")
    return float(np.mean(d * d * d) / m2 ** 1.5)


def auto_gamma(pi, sample_size=DEFAULT_SAMPLE_SIZE, seed=0, tol=0.05, max_iter=40):
    """Pick ``gamma`` in [-1, 1] making the unwarped entries symmetric.

    Samples ``sample_size`` non-zero entries of ``pi`` (all of them if
    fewer), then bisects on the sign of ``skewness(unwarp(gamma, s))``
    until ``|skewness| < tol`` or ``max_iter`` halvings. If there is no
    sign change on the interval, the endpoint with the smaller
    ``|skewness|`` is returned and a :class:`GammaBracketWarning` issued.
    """
    vals = pi.nonzero_values() if hasattr(pi, "nonzero_values") else np.asarray(pi).ravel()
    vals = vals[vals != 0]
    if np.any(vals < 0):
        raise WarpDomainError("automatic gamma needs a non-negative proximity matrix")
    rng = np.random.default_rng(seed)
    if len(vals) > sample_size:
        vals = rng.choice(vals, size=sample_size, replace=False)

    def skew_at(gam):
        return skewness(unwarp(WarpSpec("ibc", gam), vals))

    lo, hi = -1.0, 1.0
    s_lo, s_hi = skew_at(lo), skew_at(hi)
    if abs(s_lo) < tol:
        return lo
    if abs(s_hi) < tol:
        return hi
    if np.sign(s_lo) == np.sign(s_hi):
        warnings.warn(f"skewness keeps its sign on [-1, 1] ({s_lo:.3g}, {s_hi:.3g})",
                      GammaBracketWarning, stacklevel=2)
        return lo if abs(s_lo) <= abs(s_hi) else hi
    mid = 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        s_mid = skew_at(mid)
        if abs(s_mid) < tol:
            break
        if np.sign(s_mid) == np.sign(s_lo):
            lo, s_lo = mid, s_mid
        else:
            hi = mid
    return float(min(1.0, max(-1.0, mid)))
