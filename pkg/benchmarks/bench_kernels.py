"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from psychfit import _kernels
from psychfit._kernels import _numpy as np_kernels

try:
    from psychfit._kernels import _core
except ImportError:
    _core = None


def bench(label, fn, *args, repeats=20):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    per_call = (time.perf_counter() - t0) / repeats
    print(f"  {label:<10} {per_call * 1e3:9.3f} ms/call")
    return per_call


def main():
    rng = np.random.default_rng(0)
    print(f"active backend: {_kernels.BACKEND}")

    n, j, q = 2000, 20, 61
    x = (rng.random((n, j)) < 0.5).astype(np.float64)
    p = np.clip(rng.random((q, j)), 1e-6, 1 - 1e-6)
    print(f"\npattern_loglik  (N={n}, J={j}, Q={q})")
    t_np = bench("numpy", np_kernels.pattern_loglik, x, p)
    if _core is not None:
        xu = np.ascontiguousarray(x, dtype=np.uint8)
        t_cy = bench("cython", _core.pattern_loglik, xu, p)
        print(f"  speedup    {t_np / t_cy:9.2f}x")

    probs = rng.random(40)
    print(f"\nscore_distribution  (J={probs.shape[0]}, 1000 calls/run)")

    def run_np():
        for _ in range(1000):
            np_kernels.score_distribution(probs)

    t_np = bench("numpy", run_np)
    if _core is not None:
        pc = np.ascontiguousarray(probs)

        def run_cy():
            for _ in range(1000):
                _core.score_distribution(pc)

        t_cy = bench("cython", run_cy)
        print(f"  speedup    {t_np / t_cy:9.2f}x")


if __name__ == "__main__":
    main()
