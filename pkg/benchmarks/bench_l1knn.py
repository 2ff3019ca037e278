"""Compare the compiled and numpy L1 nearest-neighbor backends.

Two data regimes:

* matched (default): queries are corpus rows plus small noise, the shape
  embeddings actually have once alignment training has pulled matched
  entities together.  Nearest-neighbor bounds tighten fast, so the compiled
  kernels abandon most rows after one feature block.
* --uniform: independent Gaussian queries and corpus.  Distances
  concentrate, pruning almost never fires, and both backends pay for the
  full scan; this is the compiled kernels' worst case.

Every timed call is also checked for exact equality between backends.
"""

import argparse
import sys
import time

import numpy as np

from triplealign import _l1knn_np

try:
    from triplealign import _l1knn
except ImportError:
    _l1knn = None


def timed(fn, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def make_data(n, dim, uniform, rng):
    corpus = rng.normal(0.0, 1.0, size=(n, dim))
    if uniform:
        queries = rng.normal(0.0, 1.0, size=(n, dim))
        gold = rng.integers(0, n, size=n)
    else:
        # queries are jittered corpus rows in shuffled order; gold is the
        # row each query came from
        gold = rng.permutation(n)
        queries = corpus[gold] + rng.normal(0.0, 0.05, size=(n, dim))
    return (np.ascontiguousarray(queries), np.ascontiguousarray(corpus),
            gold.astype(np.int64))


def bench_size(n, dim, k, repeats, uniform, rng):
    queries, corpus, gold = make_data(n, dim, uniform, rng)
    ops = [
        ("l1_topk", lambda mod: lambda: mod.l1_topk(queries, corpus, k)),
        ("l1_argmin", lambda mod: lambda: mod.l1_argmin(queries, corpus)),
        ("l1_rank_of", lambda mod: lambda: mod.l1_rank_of(queries, corpus, gold)),
    ]
    for name, bind in ops:
        np_time, np_result = timed(bind(_l1knn_np), repeats)
        line = f"n={n:6d}  {name:<11s} numpy  {np_time * 1e3:8.1f} ms"
        if _l1knn is not None:
            cy_time, cy_result = timed(bind(_l1knn), repeats)
            if isinstance(np_result, tuple):
                match = all(np.array_equal(a, b)
                            for a, b in zip(np_result, cy_result))
            else:
                match = np.array_equal(np_result, cy_result)
            line += (f"   cython {cy_time * 1e3:8.1f} ms   "
                     f"x{np_time / cy_time:5.1f}  "
                     f"{'ok' if match else 'MISMATCH'}")
            if not match:
                print(line)
                sys.exit(1)
        print(line)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="500,2000,8000",
                        help="comma-separated corpus sizes")
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--k", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--uniform", action="store_true",
                        help="independent random queries instead of "
                             "jittered corpus rows")
    args = parser.parse_args(argv)

    if _l1knn is None:
        print("compiled backend not available; timing numpy only")
    else:
        print("default backend: cython")
    print(f"regime: {'uniform' if args.uniform else 'matched'}")
    rng = np.random.default_rng(args.seed)
    for size in args.sizes.split(","):
        bench_size(int(size), args.dim, args.k, args.repeats,
                   args.uniform, rng)


if __name__ == "__main__":
    main()
