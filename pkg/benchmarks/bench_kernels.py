#!/usr/bin/env python3
"""Benchmark the numba-jitted kernels against the pure-numpy fallbacks.

Run:  python benchmarks/bench_kernels.py
(Representative output on one 2024 laptop core at the bottom.)
"""

import time

import numpy as np

from m3sph import _kernels
from m3sph.polyalg import coeff_table
from m3sph.so3rep import build_irrep


def median_time(fn, *args, repeat=7, warmup=2):
    for _ in range(warmup):
        fn(*args)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def bench_f_table():
    t = np.random.default_rng(0).uniform(0, 60, 200_000)
    jmax = 12
    out = np.empty((jmax + 1, t.size))

    def run_nb():
        _kernels._f_table_nb(jmax, t, out)

    def run_np():
        _kernels._f_table_np(jmax, t, out)

    return "f_table (200k pts, jmax=12)", run_nb, run_np


def bench_q_series():
    rng = np.random.default_rng(1)
    m = 2
    rep = build_irrep(m)
    gens = np.ascontiguousarray(rep.generators)
    ajs = coeff_table(m).as_floats()
    n = 40_000
    coeffs = (rng.normal(size=(n, 2 * m + 1)) + 1j * rng.normal(size=(n, 2 * m + 1)))
    xs = rng.uniform(-3, 3, size=(n, 3))
    out = np.empty((n, rep.dim, rep.dim), dtype=np.complex128)

    def run_nb():
        _kernels._q_series_nb(gens, ajs, coeffs, xs, out)

    def run_np():
        _kernels._q_series_np(gens, ajs, coeffs, xs, out)

    return "q_series (40k pts, m=2)", run_nb, run_np


def bench_plane_wave_sum():
    rng = np.random.default_rng(2)
    nn, nx, d = 2000, 64, 5
    nodes = rng.normal(size=(nn, 3))
    nodes /= np.linalg.norm(nodes, axis=1)[:, None]
    weights = rng.uniform(0.1, 1.0, nn)
    projs = rng.normal(size=(nn, d, d)) + 1j * rng.normal(size=(nn, d, d))
    xs = rng.uniform(-3, 3, size=(nx, 3))
    out = np.empty((nx, d, d), dtype=np.complex128)

    def run_nb():
        _kernels._plane_wave_sum_nb(nodes, weights, projs, 1.3, xs, out)

    def run_np():
        _kernels._plane_wave_sum_np(nodes, weights, projs, 1.3, xs, out)

    return "plane_wave_sum (2k nodes x 64 pts, d=5)", run_nb, run_np


def bench_fourier_grid_sum():
    rng = np.random.default_rng(3)
    npts, ny, d = 35_937, 96, 3  # a 33^3 lattice
    pts = rng.uniform(-8, 8, size=(npts, 3))
    values = rng.normal(size=(npts, d, d)) + 1j * rng.normal(size=(npts, d, d))
    ys = rng.uniform(-4, 4, size=(ny, 3))
    out = np.empty((ny, d, d), dtype=np.complex128)

    def run_nb():
        _kernels._fourier_grid_sum_nb(values, pts, ys, 0.125, out)

    def run_np():
        _kernels._fourier_grid_sum_np(values, pts, ys, 0.125, out)

    return "fourier_grid_sum (33^3 lattice x 96 freqs)", run_nb, run_np


def main():
    if not _kernels.NUMBA_AVAILABLE:
        raise SystemExit("numba is not importable; nothing to compare")
    benches = [bench_f_table(), bench_q_series(), bench_plane_wave_sum(), bench_fourier_grid_sum()]
    print(f"{'kernel':<44} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for name, run_nb, run_np in benches:
        t_nb = median_time(run_nb)
        t_np = median_time(run_np)
        print(f"{name:<44} {t_nb*1e3:>8.1f}ms {t_np*1e3:>8.1f}ms {t_np/t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
