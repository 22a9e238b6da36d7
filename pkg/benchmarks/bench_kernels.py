"""Time the numba kernels against their pure-numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once untimed so JIT compilation is excluded.
"""

import argparse
import time

import numpy as np

from edmlab import _accel, boltzmann, kernels


def _cases(rng):
    A = rng.standard_normal((40, 40))
    A = A + A.T
    xi = np.where(rng.random((200, 200)) < 0.5, -1.0, 1.0)
    s0 = np.where(rng.random(200) < 0.5, -1.0, 1.0)
    order = rng.permutation(200).astype(np.int64)
    noise = rng.standard_normal((50_000, 2))
    X = rng.standard_normal((20_000, 8)) * np.linspace(2.0, 0.5, 8)
    W = -np.triu((rng.random((16, 16)) < 0.5).astype(float), 1)
    W = W + W.T
    phi0 = rng.uniform(0, 2 * np.pi, 16)
    kap = np.linspace(0, 1.5, 2000)
    grad = boltzmann._double_well_grad
    return {
        "jacobi_eigh (40x40)": (
            lambda: kernels._jacobi_numba(A, 1e-14, 100),
            lambda: kernels._jacobi_numpy(A, 1e-14, 100),
        ),
        "denseam sweep n=3 (K=200, N=200)": (
            lambda: kernels._sweep_numba(xi, s0.copy(), order, kernels.SWEEP_POWER, 3),
            lambda: kernels._sweep_numpy(xi, s0.copy(), order, kernels.SWEEP_POWER, 3),
        ),
        "euler-maruyama chain (5e4 steps)": (
            lambda: kernels._em_chain_numba(grad, np.zeros(2), noise, 1e-3, 0.05, 0, 1),
            lambda: kernels._em_chain_numpy(grad.py_func, np.zeros(2), noise, 1e-3, 0.05, 0, 1),
        ),
        "oja (2e4 samples, d=8)": (
            lambda: kernels._oja_numba(X, np.ones(8), 1e-3, 1e6),
            lambda: kernels._oja_numpy(X, np.ones(8), 1e-3, 1e6),
        ),
        "oim relax (N=16, 2000 steps)": (
            lambda: kernels._oim_relax_numba(W, phi0, kap, 0.05),
            lambda: kernels._oim_relax_numpy(W, phi0, kap, 0.05),
        ),
    }


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':36s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s}")
    for name, (fast, slow) in _cases(np.random.default_rng(0)).items():
        a, b = _best(fast, args.repeat), _best(slow, args.repeat)
        print(f"{name:36s} {1e3 * a:11.3f} {1e3 * b:11.3f} {b / a:7.1f}x")


if __name__ == "__main__":
    main()
