"""Time the numba and numpy backends of the march and RK4 kernels.

    python3 benchmarks/bench_kernels.py --sizes 101 201 401 --repeat 5
"""
import argparse
import time

import numpy as np

from charcauchy import kernels


def march_inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    h = 1.0 / (n - 1)
    phi = np.zeros((n, n))
    phi[0] = np.sin(np.linspace(0.0, 3.0, n))
    phi[:, 0] = phi[0, 0]
    cells = (n - 1, n - 1)
    return phi, rng.normal(size=cells), 0.3 * rng.normal(size=cells), 0.3 * rng.normal(size=cells), \
        rng.uniform(0, 1, size=cells), h


def rk4_inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    return (rng.uniform(0, 1, n), rng.uniform(0, 1, n - 1), rng.normal(size=n), rng.normal(size=n - 1),
            1.0 / (n - 1))


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[101, 201, 401])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if kernels.march_numba is None:
        raise SystemExit("numba is not installed")
    print(f"{'kernel':<8}{'n':>6}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>9}{'max diff':>11}")
    for n in args.sizes:
        phi, src, a, b, q, h = march_inputs(n)
        kernels.march_numba(phi.copy(), src, a, b, q, h, 0, 0)  # compile
        ref = kernels.march_numpy(phi.copy(), src, a, b, q, h, 0, 0)
        out = kernels.march_numba(phi.copy(), src, a, b, q, h, 0, 0)
        t_np = best_of(lambda: kernels.march_numpy(phi.copy(), src, a, b, q, h, 0, 0), args.repeat)
        t_nb = best_of(lambda: kernels.march_numba(phi.copy(), src, a, b, q, h, 0, 0), args.repeat)
        print(f"{'march':<8}{n:>6}{t_np:>12.4g}{t_nb:>12.4g}{t_np / t_nb:>9.1f}{np.max(np.abs(ref - out)):>11.2e}")
    for n in args.sizes:
        an, am, gn, gm, h = rk4_inputs(10 * n)
        kernels.rk4_numba(an, am, gn, gm, h, 0, True)
        ref = kernels.rk4_python(an, am, gn, gm, h, 0, True)
        out = kernels.rk4_numba(an, am, gn, gm, h, 0, True)
        t_np = best_of(lambda: kernels.rk4_python(an, am, gn, gm, h, 0, True), args.repeat)
        t_nb = best_of(lambda: kernels.rk4_numba(an, am, gn, gm, h, 0, True), args.repeat)
        print(f"{'rk4':<8}{10 * n:>6}{t_np:>12.4g}{t_nb:>12.4g}{t_np / t_nb:>9.1f}{np.max(np.abs(ref - out)):>11.2e}")


if __name__ == "__main__":
    main()
