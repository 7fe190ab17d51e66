"""Pure-numpy RK4 delay stepper (fallback backend).

Same contract as the compiled core: advance

    z'(t) = A z(t) + sum_k A_k z(t - h_k) + B u(t)

over a batch of N columns, with delayed values linearly interpolated from
the stored trajectory.  Rows 0..start of Z hold the history and initial
value; rows start+1..start+steps are written in place.
"""

import numpy as np


def _lerp_rows(Z, pos, imax):
    i0 = int(np.floor(pos))
    th = pos - i0
    if th <= 1e-12:
        return Z[i0]
    i1 = i0 + 1 if i0 + 1 <= imax else i0
    return (1.0 - th) * Z[i0] + th * Z[i1]


def rk4_delay_batch(A, delay_mats, delay_offsets, B, Z, U, start, steps, dt):
    """Fill Z[start+1 : start+steps+1]; all arrays complex128.

    Z: (S, n, N); delay_mats: (K, n, n); delay_offsets: (K,) lags in units
    of dt (each >= 1 so that stage lookups stay in known territory);
    B: (n, p) or None; U: (S, p, N) input samples aligned with Z or None.
    """
    K = delay_mats.shape[0]
    last = Z.shape[0] - 1

    def forcing(i, c, filled):
        acc = None
        for k in range(K):
            zd = _lerp_rows(Z, i + c - delay_offsets[k], filled)
            term = delay_mats[k] @ zd
            acc = term if acc is None else acc + term
        if B is not None:
            ud = _lerp_rows(U, i + c, last)
            term = B @ ud
            acc = term if acc is None else acc + term
        return acc

    half = 0.5 * dt
    sixth = dt / 6.0
    for i in range(start, start + steps):
        z = Z[i]
        d0 = forcing(i, 0.0, i)
        dh = forcing(i, 0.5, i)
        d1 = forcing(i, 1.0, i)
        k1 = A @ z
        if d0 is not None:
            k1 = k1 + d0
        k2 = A @ (z + half * k1)
        if dh is not None:
            k2 = k2 + dh
        k3 = A @ (z + half * k2)
        if dh is not None:
            k3 = k3 + dh
        k4 = A @ (z + dt * k3)
        if d1 is not None:
            k4 = k4 + d1
        Z[i + 1] = z + sixth * (k1 + 2.0 * (k2 + k3) + k4)
