"""Compare the numba and numpy backends of the hot kernels.

    python3 benchmarks/bench_accel.py [--size N] [--repeat R]

Prints best-of-R wall times per kernel and backend, the speed-up, and the
largest disagreement between the two backends.
"""
import argparse
import time

import numpy as np

from pcwlattice import special
from pcwlattice.trapscan import strict_local_minima


def best_time(fn, repeat):
    fn()  # warm-up (numba compiles or loads its cache here)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernels(size):
    rng = np.random.default_rng(1234)
    x = np.concatenate([rng.uniform(1e-3, 8.0, size // 2), rng.uniform(8.0, 60.0, size - size // 2)])
    n = max(8, round(size ** (1.0 / 3.0)))
    g = np.linspace(-3.0, 3.0, n)
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    field = np.cos(2.0 * X) * np.cos(2.0 * Y) + 0.1 * Z**2
    return {
        "J0": (lambda b: special.j0(x, backend=b), False),
        "Y0": (lambda b: special.y0(x, backend=b), False),
        "K0": (lambda b: special.k0(x, backend=b), False),
        f"minima {n}^3": (lambda b: strict_local_minima(field, backend=b), True),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"{'kernel':<16}{'numba [ms]':>12}{'numpy [ms]':>12}{'speed-up':>10}{'max diff':>12}")
    for name, (fn, boolean) in kernels(args.size).items():
        t_nb = best_time(lambda: fn("numba"), args.repeat)
        t_np = best_time(lambda: fn("numpy"), args.repeat)
        a, b = fn("numba"), fn("numpy")
        diff = float(np.count_nonzero(a != b)) if boolean else float(np.max(np.abs(a - b)))
        print(f"{name:<16}{1e3 * t_nb:>12.2f}{1e3 * t_np:>12.2f}{t_np / t_nb:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
