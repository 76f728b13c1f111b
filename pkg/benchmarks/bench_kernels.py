"""Benchmark: compiled extension vs numpy fallback for the hot kernels.

Run:  python benchmarks/bench_kernels.py

Micro-kernels are timed in-process (both implementations are importable
side by side); the end-to-end refinement timing re-runs this script's
workload in a subprocess with WIENERBAND_PURE_PYTHON=1 to exercise the
import-time dispatch.
"""

import os
import subprocess
import sys
import time

import numpy as np
from numpy.random import Philox

from wienerband import kernels


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_pair(name, compiled_fn, numpy_fn, work_units):
    t_np = timeit(numpy_fn)
    row = f"{name:38s} numpy {t_np * 1e3:9.2f} ms ({t_np / work_units * 1e9:7.1f} ns/unit)"
    if compiled_fn is not None:
        t_c = timeit(compiled_fn)
        row += (f" | compiled {t_c * 1e3:9.2f} ms "
                f"({t_c / work_units * 1e9:7.1f} ns/unit) | x{t_np / t_c:5.2f}")
    print(row)


def main():
    print(f"compiled extension available: {kernels.HAVE_COMPILED}; "
          f"dispatch selected: {'compiled' if kernels.USING_COMPILED else 'numpy'}")

    for m in (512, 1024, 2048):
        dt = 2.0 ** -8
        h = 20.0 / (m - 1)
        bench_pair(
            f"kernel matrix {m}x{m}",
            (lambda m=m, h=h: kernels.gauss_kernel_matrix_compiled(
                -10.0, h, m, -10.0, h, m, dt)) if kernels.HAVE_COMPILED else None,
            lambda m=m, h=h: kernels.gauss_kernel_matrix_numpy(
                -10.0, h, m, -10.0, h, m, dt),
            m * m)

    n = 10**6
    raw = Philox(key=1).random_raw(n)
    u = np.ascontiguousarray(((raw >> np.uint64(11)).astype(np.float64) + 0.5)
                             * 2.0 ** -53)
    bench_pair(
        "inverse normal CDF (1e6 draws)",
        (lambda: kernels.inv_norm_cdf_compiled(u)) if kernels.HAVE_COMPILED else None,
        lambda: kernels.inv_norm_cdf_numpy(u),
        n)

    rows, ndim = 10**5, 8
    sqrt_dt = np.ascontiguousarray(np.sqrt(np.full(ndim, 1.0 / ndim)))
    lo, hi = np.full(ndim, -1.0), np.full(ndim, 1.0)
    bench_pair(
        "MC rectangle count (1e5 x 8)",
        (lambda: kernels.mc_rect_count(Philox(key=2), rows, sqrt_dt, lo, hi))
        if kernels.HAVE_COMPILED else None,
        lambda: kernels.mc_rect_count_numpy(Philox(key=2), rows, sqrt_dt, lo, hi),
        rows * ndim)

    bench_pair(
        "bridge paths (1e5 rows, level 4)",
        (lambda: kernels.mc_bridge_block(Philox(key=3), rows, 4))
        if kernels.HAVE_COMPILED else None,
        lambda: kernels.mc_bridge_block_numpy(Philox(key=3), rows, 4),
        rows * 16)

    print("\nend-to-end refinement (one-sided barrier, levels 0..8, m=1024):")
    script = ("import time,wienerband as wb;"
              "t0=time.perf_counter();"
              "e=wb.phi_band(wb.band(float('-inf'),1.0),"
              "wb.RefinementPolicy(0,8,1e-300),wb.QuadratureConfig(1024));"
              "print(f'  {time.perf_counter()-t0:.2f}s value={e.value:.6f}')")
    for label, env_extra in (("compiled", {}), ("numpy fallback",
                                                {"WIENERBAND_PURE_PYTHON": "1"})):
        env = dict(os.environ, **env_extra)
        print(f"{label}:", flush=True)
        subprocess.run([sys.executable, "-c", script], env=env, check=True)


if __name__ == "__main__":
    main()
