#!/usr/bin/env python3
"""Benchmark the stepping kernel backends: compiled core vs NumPy fallback.

The per-step work is one tridiagonal matvec plus one tridiagonal solve; the
compiled core fuses the loop and hoists the Thomas factorization, while the
fallback calls LAPACK's banded solver every step.

Usage: python benchmarks/bench_kernels.py [--n 2000] [--steps 5000]
"""

import argparse
import time

import numpy as np

from lattice_lab import Grid, LatticeParams, SchemeConfig, derive_params, init_state, tsallis_profile
from lattice_lab._kernels import _python
from lattice_lab.fpe_solver import _theta_bands, build_operator

try:
    from lattice_lab._kernels import _native
except ImportError:
    _native = None


def bench(impl, a, b, w, steps, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out, bad, _ = impl.run_theta_steps(*a, *b, w, steps)
        best = min(best, time.perf_counter() - t0)
        assert bad == -1
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2000, help="grid cells")
    ap.add_argument("--steps", type=int, default=5000, help="time steps")
    args = ap.parse_args()

    params = LatticeParams(1.0, 0.1, 0.5, 1.0)
    grid = Grid(50.0, args.n)
    cfg = SchemeConfig(dt=0.01)
    op = build_operator(grid, params, cfg)
    a, b = _theta_bands(op, cfg.dt, cfg.theta)
    w = init_state(grid, tsallis_profile(derive_params(params))).values

    print(f"grid n = {args.n}, steps = {args.steps}")
    t_py, out_py = bench(_python, a, b, w, args.steps)
    rate = args.steps / t_py
    print(f"python backend : {t_py:8.3f} s   {rate:10.0f} steps/s")

    if _native is None:
        print("native backend : not built (python setup.py build_ext --inplace)")
        return

    t_cy, out_cy = bench(_native, a, b, w, args.steps)
    rate = args.steps / t_cy
    print(f"native backend : {t_cy:8.3f} s   {rate:10.0f} steps/s")
    print(f"speedup        : {t_py / t_cy:8.2f}x")
    dev = np.max(np.abs(out_py - out_cy))
    print(f"max |python - native| after {args.steps} steps: {dev:.3e}")


if __name__ == "__main__":
    main()
