"""Numba vs pure-numpy walk kernels.

Times first-order (FST) and second-order (FSMT, p=q=0.5) visit-count
estimation on uniform random graphs with both backends, checks that the
counts agree exactly, and prints a TSV table.

    python benchmarks/bench_backends.py --sizes 1e4,4e4 --trials 50
"""
import argparse
import sys
import time

import numpy as np

from gemd._backend import NUMBA_AVAILABLE
from gemd.proximity import fsmt_walk_estimate, fst_walk_estimate
from gemd.synthetic import gnm


def _best(fn, repeats):
    best, out = np.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(sizes, degree, length, trials, repeats, seed):
    walks = {
        "fst": lambda g, b: fst_walk_estimate(g, length, trials, seed=seed, backend=b),
        "fsmt": lambda g, b: fsmt_walk_estimate(g, length, trials, 0.5, 0.5, seed=seed, backend=b),
    }
    warm = gnm(50, 200, seed=seed)
    for fn in walks.values():
        fn(warm, "numba")
    rows = []
    for i, size in enumerate(sizes):
        g = gnm(int(round(2 * size / degree)), size, seed=seed + i)
        for name, fn in walks.items():
            t_nb, c_nb = _best(lambda: fn(g, "numba"), repeats)
            t_np, c_np = _best(lambda: fn(g, "numpy"), repeats)
            same = (c_nb.counts != c_np.counts).nnz == 0
            rows.append((size, g.n, name, t_nb, t_np, t_np / t_nb, same))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="1e4,2e4,4e4", help="edge counts")
    ap.add_argument("--degree", type=float, default=10.0)
    ap.add_argument("--walk-length", type=int, default=7)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args(argv)
    if not NUMBA_AVAILABLE:
        print("numba is not installed; nothing to compare", file=sys.stderr)
        return 1
    sizes = [int(float(s)) for s in args.sizes.split(",")]
    rows = run(sizes, args.degree, args.walk_length, args.trials, args.repeats, args.seed)
    print("edges\tnodes\twalk\tnumba_s\tnumpy_s\tspeedup\tidentical")
    for e, n, name, a, b, r, same in rows:
        print(f"{e}\t{n}\t{name}\t{a:.4f}\t{b:.4f}\t{r:.1f}\t{same}")
    return 0 if all(r[-1] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
