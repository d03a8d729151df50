"""Kernel backend selection.

Hot loops (random-walk simulation, row prefix sums) have a numba
implementation and a pure-numpy implementation with identical output.
Set ``GEMD_DISABLE_NUMBA=1`` to force the numpy path; it is also used
when numba cannot be imported.
"""
import os

_FLAG = os.environ.get("GEMD_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - depends on environment
    NUMBA_AVAILABLE = False

if NUMBA_AVAILABLE and not any(k in os.environ for k in
                               ("NUMBA_THREADING_LAYER", "NUMBA_THREADING_LAYER_PRIORITY")):
    # an outdated TBB only produces a warning before numba falls back anyway
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

USE_NUMBA = NUMBA_AVAILABLE and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a no-op decorator.

    The numba-decorated kernels are always defined so the benchmark can
    compare both paths; whether the public entry points dispatch to them
    is decided by ``USE_NUMBA``.
    """
    if NUMBA_AVAILABLE:
        import numba
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def backend_name():
    return "numba" if USE_NUMBA else "numpy"


def set_workers(n):
    """Cap the numba thread pool. Results never depend on this."""
    if n is None or not NUMBA_AVAILABLE:
        return
    import numba
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
