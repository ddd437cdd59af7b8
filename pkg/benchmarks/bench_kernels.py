"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once before timing so numba compilation is excluded.
Outputs of both variants are compared as a sanity check.
"""
import argparse
import time

import numpy as np
from scipy import sparse

from ssrc import _kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def esn_args(L, T, rng):
    A = sparse.random(L, L, density=0.05, random_state=1, format="csr")
    A.data = A.data * 2 - 1
    # contracting reservoir, as used in practice (rho = 0.9)
    A = A * (0.9 / np.max(np.abs(np.linalg.eigvals(A.toarray()))))
    A.sort_indices()
    return (A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data,
            rng.uniform(-1, 1, L), rng.standard_normal(T), 0.3, np.zeros(L))


def cases():
    rng = np.random.default_rng(0)
    for L in (50, 100, 200, 300, 400):
        yield f"esn_states L={L} T=9000", _kernels.esn_states_numba, _kernels.esn_states_numpy, esn_args(L, 9000, rng)
    lor_args = (np.array([1.0, 1.0, 1.0]), 10.0, 28.0, 8.0 / 3.0, 0.02, 10_000)
    yield "lorenz_rk4 10k steps", _kernels.lorenz_rk4_numba, _kernels.lorenz_rk4_numpy, lor_args
    padded = np.pad(rng.standard_normal(100_000), 2, mode="edge")
    yield "sliding_median n=1e5 w=5", _kernels.sliding_median_numba, _kernels.sliding_median_numpy, (padded, 5)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':<28}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max |diff|':>12}")
    for name, fast, slow, a in cases():
        ref = slow(*a)
        got = fast(*a)
        t_fast = best_of(lambda: fast(*a), args.repeat)
        t_slow = best_of(lambda: slow(*a), args.repeat)
        diff = float(np.max(np.abs(got - ref)))
        print(f"{name:<28}{t_fast:>12.4f}{t_slow:>12.4f}{t_slow / t_fast:>9.1f}x{diff:>12.2e}")


if __name__ == "__main__":
    main()
