"""Benchmark the join kernels: compiled extension vs pure-numpy fallback.

Times both engines (brute force and grid) on clustered point sets where the
grid's candidate pruning matters. Run from the repository root:

    python benchmarks/bench_join.py [--sizes 500,1000,2000] [--dim 3] [--eps 0.25]
"""
import argparse
import time

import numpy as np

from fiberalign import _joinkern_py

try:
    from fiberalign import _joinkern_c
except ImportError:
    _joinkern_c = None


def clustered_pair(rng, n, dim, n_clusters=25, spread=8.0):
    """Two point sets sharing cluster centers, so the join is non-trivial."""
    centers = rng.random((n_clusters, dim)) * spread
    xs = centers[rng.integers(0, n_clusters, n)] + rng.random((n, dim))
    ys = centers[rng.integers(0, n_clusters, n)] + rng.random((n, dim))
    return xs, ys


def best_of(fn, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="500,1000,2000")
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = [("python", _joinkern_py)]
    if _joinkern_c is not None:
        backends.append(("cython", _joinkern_c))
    else:
        print("compiled extension not available; benchmarking the fallback only")

    rng = np.random.default_rng(args.seed)
    sizes = [int(s) for s in args.sizes.split(",")]
    header = f"{'n':>6} {'engine':>6} " + " ".join(f"{name:>12}" for name, _ in backends)
    print(f"dim={args.dim} eps={args.eps} (times are best-of-3 seconds)")
    print(header)
    print("-" * len(header))
    for n in sizes:
        X, Y = clustered_pair(rng, n, args.dim)
        for engine in ("brute", "grid"):
            cells = []
            counts = set()
            evals = set()
            for _, mod in backends:
                fn = mod.brute_pairs if engine == "brute" else mod.grid_pairs
                t, res = best_of(lambda: fn(X, Y, args.eps))
                cells.append(f"{t:12.4f}")
                counts.add(len(set(zip(res[0].tolist(), res[1].tolist()))))
                evals.add(res[3])
            agree = "ok" if len(counts) == 1 and len(evals) == 1 else "MISMATCH"
            print(f"{n:>6} {engine:>6} " + " ".join(cells) + f"   pairs={counts.pop()} evals={evals.pop()} [{agree}]")


if __name__ == "__main__":
    main()
