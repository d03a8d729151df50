"""Counter-based random numbers for reproducible parallel walks.

Every uniform draw is a pure function of ``(seed, start node, trial,
step)``: the SplitMix64 finalizer is used as a keyed hash instead of as
a sequential generator. No state is carried between draws, so walks can
be scheduled on any number of workers, or split into batches, and still
reproduce bit for bit.

Three implementations are kept in lockstep: plain Python ints (seed
derivation), vectorized numpy (fallback kernels), and numba scalars
(compiled kernels). ``tests/test_rng.py`` pins them against each other.
"""
import numpy as np

from ._backend import njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
STREAM = 0xD1B54A32D192ED03
INV_2_53 = 1.0 / 9007199254740992.0


def mix64(z):
    """SplitMix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def seed_key(seed):
    """Reduce an arbitrary integer seed to a 64-bit generator key."""
    return mix64((int(seed) & MASK64) + GOLDEN)


def derive_seed(seed, index):
    """Child seed for sub-task ``index``; deterministic and well separated."""
    return mix64(seed_key(seed) ^ ((int(index) * STREAM) & MASK64)) >> 1


def stream_key(key, start, trial):
    """Key of the random stream for walk ``trial`` started at ``start``."""
    inner = mix64(((int(start) * GOLDEN) + int(trial)) & MASK64)
    return mix64(key ^ inner)


def uniform(stream, counter):
    """Uniform double in [0, 1) for draw number ``counter`` of a stream."""
    z = mix64(stream + (int(counter) + 1) * GOLDEN)
    return (z >> 11) * INV_2_53


# -- numpy, vectorized ------------------------------------------------------

_U = np.uint64


def mix64_np(z):
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> _U(30))) * _U(MIX1)
    z = (z ^ (z >> _U(27))) * _U(MIX2)
    return z ^ (z >> _U(31))


def stream_key_np(key, starts, trials):
    starts = np.asarray(starts, dtype=np.uint64)
    trials = np.asarray(trials, dtype=np.uint64)
    inner = mix64_np(starts * _U(GOLDEN) + trials)
    return mix64_np(np.asarray(key, dtype=np.uint64) ^ inner)


def uniform_np(streams, counter):
    streams = np.asarray(streams, dtype=np.uint64)
    z = mix64_np(streams + _U((int(counter) + 1) * GOLDEN & MASK64))
    return (z >> _U(11)).astype(np.float64) * INV_2_53


# -- numba scalars ------------------------------------------------------------

@njit(inline="always", cache=True)
def _mix64_nb(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


@njit(inline="always", cache=True)
def _stream_key_nb(key, start, trial):
    inner = _mix64_nb(np.uint64(start) * np.uint64(GOLDEN) + np.uint64(trial))
    return _mix64_nb(key ^ inner)


@njit(inline="always", cache=True)
def _uniform_nb(stream, counter):
    z = _mix64_nb(stream + (np.uint64(counter) + np.uint64(1)) * np.uint64(GOLDEN))
    return np.float64(z >> np.uint64(11)) * INV_2_53
