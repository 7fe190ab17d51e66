"""Stepper backend selection.

The batched RK4 delay stepper is the hot kernel of the package: bound
sweeps propagate hundreds of basis columns over hundreds of steps, and the
CLI simulate path steps single trajectories thousands of times.  Two
implementations share one contract:

* _stepper_c  -- Cython core with hand-rolled complex loops; wins by
  10-100x when the per-step work is small (call overhead dominates);
* _stepper_py -- numpy/BLAS fallback; wins on wide basis batches and
  large state dimensions (level-3 BLAS dominates).

Dispatch picks per call on the per-step work size n*n*N (measured
crossover: benchmarks/bench_stepper.py).  Set DELAYADM_PURE=1 to force
the pure path everywhere; if the extension did not build, the fallback
serves every call.
"""

import os

from . import _stepper_py

# below this per-step gemm work the compiled core beats BLAS
_SMALL_WORK = 512

if os.environ.get("DELAYADM_PURE", "").strip() not in ("", "0"):
    _compiled = None
    BACKEND = "pure"
else:
    try:
        from . import _stepper_c as _compiled

        BACKEND = "compiled"
    except ImportError:
        _compiled = None
        BACKEND = "pure"


def rk4_delay_batch(A, delay_mats, delay_offsets, B, Z, U, start, steps, dt):
    n, N = Z.shape[1], Z.shape[2]
    if _compiled is not None and n * n * N <= _SMALL_WORK:
        return _compiled.rk4_delay_batch(
            A, delay_mats, delay_offsets, B, Z, U, start, steps, dt
        )
    return _stepper_py.rk4_delay_batch(
        A, delay_mats, delay_offsets, B, Z, U, start, steps, dt
    )


rk4_delay_batch_pure = _stepper_py.rk4_delay_batch
