#!/usr/bin/env python3
"""Compare the numba hot-kernel path against the pure-numpy fallback.

Times the two kernel families that dominate a solver iteration (the per-row
GLM term pass and the gathered weighted-Gram assembly) across problem sizes,
plus one end-to-end solve under each backend. Run:

    python3 benchmarks/bench_kernels.py [--repeats 7]

The numpy Gram path is BLAS-backed, so expect it to win once the gathered
block is large; the numba path avoids materializing the m x n slice and wins
at small block sizes. Numbers are medians over the repeats.
"""

import argparse
import subprocess
import sys
import time

import numpy as np

from sigma_opt import kernels


def median_time(fn, repeats):
    times = []
    fn()  # warm (JIT + caches)
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def bench_terms(repeats):
    print("\nGLM row terms (loss sum + derivative weights), seconds per call")
    print(f"{'kind':<10} {'m':>8} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    gen = np.random.default_rng(0)
    for kind in ("gaussian", "logistic", "poisson"):
        for m in (1_000, 100_000, 1_000_000):
            z = np.abs(gen.standard_normal(m)) + 0.05
            if kind == "poisson":
                b = np.maximum(1, gen.poisson(3.0, m)).astype(np.float64)
            elif kind == "logistic":
                b = np.where(gen.standard_normal(m) > 0, 1.0, -1.0)
            else:
                b = gen.standard_normal(m)
            t_np = median_time(lambda: getattr(kernels, f"{kind}_terms_numpy")(z, b), repeats)
            t_nb = median_time(lambda: getattr(kernels, f"{kind}_terms_numba")(z, b), repeats)
            print(f"{kind:<10} {m:>8} {t_np:>12.2e} {t_nb:>12.2e} {t_np / t_nb:>8.2f}x")


def bench_gram(repeats):
    print("\nGathered weighted Gram (reduced-curvature assembly), seconds per call")
    print(f"{'m':>8} {'N':>6} {'n':>6} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    gen = np.random.default_rng(1)
    for m, N, n in ((400, 200, 1), (400, 200, 20), (400, 200, 100),
                    (2_000, 1_000, 50), (2_000, 1_000, 200)):
        A = gen.standard_normal((m, N))
        w = np.abs(gen.standard_normal(m))
        cols = np.sort(gen.choice(N, size=n, replace=False)).astype(np.int64)
        rows = np.arange(m, dtype=np.int64)
        t_np = median_time(lambda: kernels.gram_gather_numpy(A, w, cols, rows), repeats)
        t_nb = median_time(lambda: kernels.gram_gather_numba(A, w, cols, rows), repeats)
        print(f"{m:>8} {N:>6} {n:>6} {t_np:>12.2e} {t_nb:>12.2e} {t_np / t_nb:>8.2f}x")


def bench_solve():
    print("\nEnd-to-end solve (synthetic Poisson, m=400 N=200 n=100, 200 iterations)")
    code = (
        "import time, numpy as np\n"
        "import sigma_opt as so\n"
        "A = so.svd_gap_matrix(so.SvdGapSpec(m=400, N=200, p=40, gap=100.0, seed=2),"
        " so.RngState(2))\n"
        "b, xt = so.synth_labels(A, so.LabelSpec('poisson', seed=3), so.RngState(3))\n"
        "model = so.make_objective('poisson', so.Dataset(A, b), so.Regularization(xi2=1e-6))\n"
        "cfg = so.SigmaConfig(n=100, epsilon=1e-16, max_iter=200, max_seconds=120, seed=1)\n"
        "so.sigma_solve(model, xt, cfg)\n"  # warm run
        "t0 = time.perf_counter()\n"
        "so.sigma_solve(model, xt, cfg)\n"
        "print(f'  {time.perf_counter() - t0:.2f}s')\n"
    )
    for flag, label in ((None, "auto (hybrid)"), ("1", "numba"), ("0", "numpy")):
        print(f"backend={label}:", end="", flush=True)
        env = {"PATH": "/usr/bin:/bin"}
        if flag is not None:
            env["SIGMA_OPT_NUMBA"] = flag
        subprocess.run([sys.executable, "-c", code], env=env)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=7)
    ap.add_argument("--skip-solve", action="store_true")
    args = ap.parse_args()
    if not kernels.using_numba():
        print("numba backend unavailable (SIGMA_OPT_NUMBA=0 or numba missing); "
              "nothing to compare", file=sys.stderr)
        return 1
    bench_terms(args.repeats)
    bench_gram(args.repeats)
    if not args.skip_solve:
        bench_solve()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
