#!/usr/bin/env python3
"""Benchmark the compiled t-SNE kernels against the pure-numpy fallback.

Times the two hot paths (bandwidth calibration and the per-iteration
gradient) plus a full projection run at a few session-realistic sizes.

Usage: python benchmarks/bench_projection.py [--sizes 100,300,600]
"""

import argparse
import time

import numpy as np

from promptmap.projection import _kernels_py, cosine_distance_matrix
from promptmap.testkit import SyntheticCorpusSpec, make_blobs

try:
    from promptmap.projection import _kernels_c

    HAVE_COMPILED = True
except ImportError:
    _kernels_c = None
    HAVE_COMPILED = False


def timeit(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_size(n):
    spec = SyntheticCorpusSpec(n_records=n, n_blobs=3, dim=1024, spread=0.25)
    X, _, _ = make_blobs(spec, 0)
    D = cosine_distance_matrix(X)
    perp = min(30.0, (n - 1) / 3.0)

    rng = np.random.default_rng(0)
    Y = np.ascontiguousarray(rng.normal(size=(n, 2)))
    P = rng.random((n, n))
    P = P + P.T
    np.fill_diagonal(P, 0.0)
    P = np.ascontiguousarray(P / P.sum())

    rows = {}
    rows["affinities/py"] = timeit(lambda: _kernels_py.conditional_affinities(D, perp, 1e-5, 50))
    rows["gradient/py"] = timeit(lambda: _kernels_py.tsne_grad(P, Y), repeat=10)
    if HAVE_COMPILED:
        rows["affinities/c"] = timeit(lambda: _kernels_c.conditional_affinities(D, perp, 1e-5, 50))
        rows["gradient/c"] = timeit(lambda: _kernels_c.tsne_grad(P, Y), repeat=10)
    return rows


def bench_full(n):
    from promptmap.projection import TsneParams

    spec = SyntheticCorpusSpec(n_records=n, n_blobs=3, dim=1024, spread=0.25)
    X, _, _ = make_blobs(spec, 0)
    params = TsneParams(iterations=1000, rng_seed=0)

    out = {}
    for label, kernels in (("py", _kernels_py), ("c", _kernels_c)):
        if kernels is None:
            continue
        import promptmap.projection as proj

        saved = proj._kernels
        proj._kernels = kernels
        try:
            out[label] = timeit(lambda: proj.project(X, params), repeat=1)
        finally:
            proj._kernels = saved
    return out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="100,300,600")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if not HAVE_COMPILED:
        print("compiled kernels not available; benchmarking fallback only")

    print(f"{'N':>6}  {'kernel':<14} {'time':>10}  {'speedup':>8}")
    for n in sizes:
        rows = bench_size(n)
        for name in ("affinities", "gradient"):
            py = rows[f"{name}/py"]
            print(f"{n:>6}  {name + '/py':<14} {py * 1e3:>8.2f}ms")
            if HAVE_COMPILED:
                c = rows[f"{name}/c"]
                print(f"{n:>6}  {name + '/c':<14} {c * 1e3:>8.2f}ms  {py / c:>7.1f}x")
        full = bench_full(n)
        print(f"{n:>6}  {'full-run/py':<14} {full['py']:>9.2f}s")
        if "c" in full:
            print(f"{n:>6}  {'full-run/c':<14} {full['c']:>9.2f}s  {full['py'] / full['c']:>7.1f}x")
        print()


if __name__ == "__main__":
    main()
