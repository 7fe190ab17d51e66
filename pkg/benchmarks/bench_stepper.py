"""Benchmark the RK4 delay stepper: compiled core vs pure-numpy fallback.

Workloads mirror the package's hot paths: single trajectories (the CLI
simulate path) and wide basis batches (operator-norm assembly in the bound
sweeps).  Run from the repo root:

    python3 benchmarks/bench_stepper.py
"""

import time

import numpy as np

from delayadm._kernels import BACKEND, rk4_delay_batch_pure

try:
    from delayadm._kernels import _stepper_c

    COMPILED = _stepper_c.rk4_delay_batch
except ImportError:
    COMPILED = None


def _workload(seed, n, N, steps, dt):
    rng = np.random.default_rng(seed)
    A = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * 0.3
    delays = ((rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * 0.3)[None]
    offsets = np.array([1.0 / dt])
    start = int(round(1.0 / dt))
    Z = np.zeros((start + steps + 1, n, N), dtype=complex)
    Z[: start + 1] = rng.standard_normal((start + 1, n, N))
    return A, delays, offsets, None, Z, None, start, steps, dt


def _time(fn, args, repeats=3):
    best = np.inf
    for _ in range(repeats):
        work = list(args)
        work[4] = args[4].copy()
        t0 = time.perf_counter()
        fn(*work)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    cases = [
        ("single trajectory  n=1  N=1    2000 steps", _workload(0, 1, 1, 2000, 1e-3)),
        ("single trajectory  n=4  N=1    2000 steps", _workload(1, 4, 1, 2000, 1e-3)),
        ("basis batch        n=1  N=202   400 steps", _workload(2, 1, 202, 400, 1.0 / 400)),
        ("basis batch        n=4  N=808   400 steps", _workload(3, 4, 808, 400, 1.0 / 400)),
        ("population         n=400 N=1    800 steps", _workload(4, 400, 1, 800, 1.0 / 160)),
    ]
    print(f"selected backend at import: {BACKEND}")
    header = f"{'workload':<44} {'pure (s)':>10} {'compiled (s)':>13} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, args in cases:
        t_pure = _time(rk4_delay_batch_pure, args)
        if COMPILED is None:
            print(f"{name:<44} {t_pure:>10.4f} {'n/a':>13} {'n/a':>8}")
            continue
        t_comp = _time(COMPILED, args)
        work_p = list(args)
        work_p[4] = args[4].copy()
        rk4_delay_batch_pure(*work_p)
        work_c = list(args)
        work_c[4] = args[4].copy()
        COMPILED(*work_c)
        gap = np.max(np.abs(work_p[4] - work_c[4]))
        assert gap <= 1e-12 * max(1.0, np.max(np.abs(work_p[4]))), f"backend mismatch {gap}"
        print(f"{name:<44} {t_pure:>10.4f} {t_comp:>13.4f} {t_pure / t_comp:>7.1f}x")


if __name__ == "__main__":
    main()
