"""The delay semigroup, computed two independent ways.

* apply_T0: the unperturbed semigroup in closed block form (matrix
  exponential head, shifted-history tail, nilpotent beyond t = 1).
* simulate_steps: RK4 method of steps for the full delayed dynamics with
  inputs (the mild solution).
* apply_T_volterra: successive approximation of the perturbed-semigroup
  integral equation, seeded with the unperturbed semigroup.
* assemble_T_matrix / semigroup_defect: matrix representatives on the
  discretized product space, for operator-norm measurements.
"""

from __future__ import annotations

import numpy as np

from . import linalg
from ._kernels import rk4_delay_batch
from .errors import ConfigError, ConvergenceError, DimensionError, RangeError
from .state import HistorySegment, LiftedState, metric_sqrt
from .system import DelaySystem, GridSpec, Trajectory

_JUMP_TOL = 1e-9


def apply_T0(sys: DelaySystem, t, v: LiftedState):
    """Unperturbed semigroup in closed form.

    Head: e^{tA} x.  Tail at sigma: T(sigma+t)x for sigma > -t, plus the
    shifted history f(sigma+t) while sigma+t <= 0; the history contribution
    vanishes identically for t > 1 (nilpotent shift).
    """
    if t < 0:
        raise RangeError(f"semigroup time must be nonnegative, got {t}")
    if v.dim != sys.n:
        raise DimensionError(f"state dim {v.dim} does not match system dim {sys.n}")
    if t == 0:
        return v
    m = v.m
    n = sys.n
    head = linalg.expm(sys.A, t) @ v.head
    tail = np.zeros((m + 1, n), dtype=complex)
    E = linalg.expm(sys.A, 1.0 / m)
    prop = None  # e^{(sigma_j + t) A} x, built incrementally up the grid
    for j in range(m + 1):
        tau = (-1.0 + j / m) + t
        if tau > _JUMP_TOL:
            prop = linalg.expm(sys.A, tau) @ v.head if prop is None else E @ prop
            tail[j] = prop
        elif tau >= -1.0 - 1e-12:
            tail[j] = v.tail.value_at(min(tau, 0.0))
    return LiftedState(head, HistorySegment(tail))


def _prefill(grid: GridSpec, heads, tails, total_rows):
    """History rows of the simulation array: m-grid tails resampled to dt.

    heads: (n, N); tails: (m+1, n, N).  Row j0 (t = 0) is the head value;
    where f(0) != x this is the mild solution's restart convention.
    """
    m = tails.shape[0] - 1
    n, N = heads.shape
    j0 = _history_rows(grid)
    Z = np.zeros((total_rows, n, N), dtype=complex)
    rows = np.arange(j0 + 1)
    q = np.minimum(rows * grid.dt, 1.0) * m
    i0 = np.minimum(np.floor(q).astype(int), m - 1)
    th = q - i0
    Z[: j0 + 1] = (1.0 - th)[:, None, None] * tails[i0] + th[:, None, None] * tails[i0 + 1]
    Z[j0] = heads
    return Z, j0


def _delay_arrays(sys: DelaySystem, dt):
    if not sys.delays:
        return np.zeros((0, sys.n, sys.n), dtype=complex), np.zeros(0)
    mats = np.stack([Ak for Ak, _ in sys.delays])
    offs = np.array([hk / dt for _, hk in sys.delays])
    if np.any(offs < 1 - 1e-9):
        raise ConfigError(
            f"step dt = {dt} exceeds the shortest delay; method of steps needs h_k >= dt"
        )
    return mats, offs


def _history_rows(grid: GridSpec):
    j0 = int(round(1.0 / grid.dt))
    if abs(j0 * grid.dt - 1.0) > 1e-9:
        j0 = int(np.ceil(1.0 / grid.dt - 1e-12))
    return j0


def simulate_batch(sys: DelaySystem, grid: GridSpec, heads, tails, t_end, U=None):
    """Propagate a batch of initial states; returns (Z, j0).

    Z[j0 + round(t/dt)] holds the batch state at time t.
    """
    if t_end <= 0:
        raise RangeError(f"t_end must be positive, got {t_end}")
    steps = int(np.ceil(t_end / grid.dt - 1e-9))
    Z, j0 = _prefill(grid, heads, tails, _history_rows(grid) + steps + 1)
    mats, offs = _delay_arrays(sys, grid.dt)
    B = sys.B if (U is not None and sys.p > 0) else None
    rk4_delay_batch(sys.A, mats, offs, B, Z, U if B is not None else None, j0, steps, grid.dt)
    return Z, j0


def _input_samples(sys, grid, u, total_rows, j0):
    """Normalize the input record to a full (S, p, 1) array, or None."""
    if u is None or sys.p == 0:
        return None
    U = np.zeros((total_rows, sys.p, 1), dtype=complex)
    if callable(u):
        for r in range(j0, total_rows):
            U[r, :, 0] = np.atleast_1d(np.asarray(u((r - j0) * grid.dt), dtype=complex))
    else:
        arr = np.asarray(u, dtype=complex)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.shape[1] != sys.p:
            raise DimensionError(f"input has {arr.shape[1]} channels, B has {sys.p}")
        take = min(arr.shape[0], total_rows - j0)
        U[j0 : j0 + take, :, 0] = arr[:take]
        if take < total_rows - j0:
            U[j0 + take :, :, 0] = arr[-1]
    return U


def simulate_steps(sys: DelaySystem, v0: LiftedState, t_end, grid: GridSpec = None, u=None):
    """Method of steps: RK4 with linearly interpolated delayed lookups.

    Global error O(dt^2) (interpolation-limited), O(dt^4) when delayed
    values fall on stored nodes.  The input u may be a callable of t or an
    array sampled on the [0, t_end] step grid.
    """
    grid = grid or GridSpec(m=v0.m)
    grid.require_divisible()
    if v0.dim != sys.n:
        raise DimensionError(f"state dim {v0.dim} does not match system dim {sys.n}")
    if v0.m != grid.m:
        raise ConfigError(f"state grid m={v0.m} does not match grid m={grid.m}")
    steps = int(np.ceil(t_end / grid.dt - 1e-9))
    j0 = _history_rows(grid)
    total = j0 + steps + 1
    U = _input_samples(sys, grid, u, total, j0)
    Z, j0 = simulate_batch(
        sys, grid, v0.head[:, None], v0.tail.values[:, :, None], t_end, U
    )
    u_rec = None if U is None else U[j0:, :, 0].copy()
    return Trajectory(Z[:, :, 0].copy(), grid.dt, -j0 * grid.dt, u_rec)


def _lifted_basis(n, m):
    """Canonical initial data of the discretized product space.

    Columns: n head directions, then n(m+1) nodal tail directions in
    (node, component) order — matching LiftedState.to_coords.
    """
    N = n * (m + 2)
    heads = np.zeros((n, N), dtype=complex)
    heads[:, :n] = np.eye(n)
    tails = np.zeros((m + 1, n, N), dtype=complex)
    tails.reshape((m + 1) * n, N)[:, n:] = np.eye((m + 1) * n)
    return heads, tails


def _snap(x, tol=1e-6):
    r = round(x)
    return float(r) if abs(x - r) < tol else float(x)


def _read_matrix(Z, j0, grid, m, t):
    """Columns (z(t), z_t) of a batched simulation, nodewise on the m-grid."""
    n, N = Z.shape[1], Z.shape[2]
    kt = _snap(t / grid.dt)
    K = _snap(1.0 / (m * grid.dt))
    out = np.empty((n * (m + 2), N), dtype=complex)
    out[:n] = _row_at(Z, j0 + kt)
    for j in range(m + 1):
        out[n * (j + 1) : n * (j + 2)] = _row_at(Z, j0 + _snap(kt + (j - m) * K))
    return out


def _row_at(Z, pos):
    i0 = int(np.floor(pos + 1e-9))
    th = pos - i0
    if th <= 1e-9:
        return Z[i0]
    return (1.0 - th) * Z[i0] + th * Z[min(i0 + 1, Z.shape[0] - 1)]


def assemble_T_matrix(sys: DelaySystem, t, grid: GridSpec, _zero_as_flow=False):
    """Matrix representative of T(t) on the discretized product space.

    Columns are simulate_steps-propagated canonical basis states read back
    as lifted states.  T(0) is the identity by definition; pass timepoints
    through assemble_T_matrices when several are needed from one run.
    """
    if t < 0:
        raise RangeError(f"semigroup time must be nonnegative, got {t}")
    n, m = sys.n, grid.m
    if t == 0 and not _zero_as_flow:
        return np.eye(n * (m + 2), dtype=complex)
    return assemble_T_matrices(sys, [t], grid, _zero_as_flow=_zero_as_flow)[0]


def assemble_T_matrices(sys: DelaySystem, ts, grid: GridSpec, _zero_as_flow=False):
    """Representatives at several times from a single batched simulation."""
    n, m = sys.n, grid.m
    ts = list(ts)
    if any(t < 0 for t in ts):
        raise RangeError("semigroup times must be nonnegative")
    t_max = max(ts)
    heads, tails = _lifted_basis(n, m)
    Z, j0 = simulate_batch(sys, grid, heads, tails, max(t_max, grid.dt))
    out = []
    for t in ts:
        if t == 0 and not _zero_as_flow:
            out.append(np.eye(n * (m + 2), dtype=complex))
        else:
            out.append(_read_matrix(Z, j0, grid, m, t))
    return out


def lifted_operator_norm(M, n, m):
    """Operator norm of a coordinate matrix w.r.t. the lifted metric."""
    s = metric_sqrt(n, m)
    return linalg.op_norm(s[:, None] * M / s[None, :])


def semigroup_defect(sys: DelaySystem, t, s, grid: GridSpec):
    """max over basis states of ||T(t+s)v - T(t)T(s)v|| / ||v||."""
    if t < 0 or s < 0:
        raise RangeError("defect times must be nonnegative")
    Mts, Mt, Ms = assemble_T_matrices(sys, [t + s, t, s], grid)
    D = Mts - Mt @ Ms
    sc = metric_sqrt(sys.n, grid.m)
    Dw = sc[:, None] * D / sc[None, :]
    return float(np.max(np.linalg.norm(Dw, axis=0)))


def _expm_powers(A, dt, count):
    """e^{q dt A} for q = 0..count (incremental products)."""
    n = A.shape[0]
    out = np.empty((count + 1, n, n), dtype=complex)
    out[0] = np.eye(n)
    E = linalg.expm(A, dt)
    for q in range(1, count + 1):
        out[q] = E @ out[q - 1]
    return out


def _phi_factors(sys, dt, count, expAs):
    """Phi(r) = sum_k 1{r > h_k} A_k e^{(r - h_k)A} on the r-grid.

    Samples at r = h_k exactly get the half-jump value 0.5 A_k, the
    second-order trapezoid treatment of a node-aligned jump.
    """
    n = sys.n
    out = np.zeros((count + 1, n, n), dtype=complex)
    for Ak, hk in sys.delays:
        qk = hk / dt
        base = None
        for i in range(count + 1):
            rel = i - qk
            if rel > _JUMP_TOL:
                if base is None:
                    base = linalg.expm(sys.A, rel * dt)
                else:
                    base = expAs[1] @ base
                out[i] += Ak @ base
            elif abs(rel) <= _JUMP_TOL:
                out[i] += 0.5 * Ak
                base = np.eye(n, dtype=complex)
            elif base is not None:
                base = expAs[1] @ base
    return out


def _psi_values(sys, v, dt, count, expAs):
    """psi(r) = Psi(tail of T0(r) v) on the r-grid, shape (count+1, n).

    At r = h_k the shifted-history and flow contributions are averaged;
    for v in the generator domain this equals the common value A_k x.
    """
    n = sys.n
    out = np.zeros((count + 1, n), dtype=complex)
    for Ak, hk in sys.delays:
        qk = hk / dt
        for i in range(count + 1):
            rel = i - qk
            arg = i * dt - hk
            if rel > _JUMP_TOL:
                q = int(round(rel))
                if abs(rel - q) < 1e-6:
                    out[i] += Ak @ (expAs[q] @ v.head)
                else:
                    out[i] += Ak @ (linalg.expm(sys.A, arg) @ v.head)
            elif abs(rel) <= _JUMP_TOL:
                out[i] += 0.5 * (Ak @ v.head + Ak @ v.tail.value_at(0.0))
            elif arg >= -1.0 - 1e-12:
                out[i] += Ak @ v.tail.value_at(max(arg, -1.0))
    return out


def _T0_head_columns(sys, m, dt, count, expAs):
    """T0(s_i) restricted to head inputs, as lifted coordinates (N, n).

    Tail nodes sitting exactly on the shift interface get the half-jump
    average 0.5 x, consistent with trapezoid integration in s.  Assumes a
    divisible grid (1/m an integer multiple of dt), which the caller checks.
    """
    n = sys.n
    K = int(round(1.0 / (m * dt)))
    rel = np.arange(count + 1)[:, None] - (m - np.arange(m + 1))[None, :] * K
    blocks = expAs[np.clip(rel, 0, count)]  # (count+1, m+1, n, n)
    blocks = blocks * (rel > 0)[:, :, None, None]
    blocks[rel == 0] = 0.5 * np.eye(n)
    out = np.empty((count + 1, n * (m + 2), n), dtype=complex)
    out[:, :n] = expAs
    out[:, n:] = blocks.reshape(count + 1, n * (m + 1), n)
    return out


def apply_T_volterra(sys: DelaySystem, t, v: LiftedState, tol=1e-8, grid: GridSpec = None, max_iter=50):
    """Perturbed semigroup via successive approximation of its integral form.

    Iterates S^(k+1)(t)v = T0(t)v + int_0^t S^(k)(s) P T0(t-s) v ds with
    trapezoid quadrature on the simulation grid, where P w = (Psi(tail w), 0).
    Restricted to t in [0, 1]; larger times compose unit steps (the bound
    analysis lives on [0, 1] and composition controls error growth).
    """
    if t < 0:
        raise RangeError(f"semigroup time must be nonnegative, got {t}")
    grid = grid or GridSpec(m=v.m)
    if v.m != grid.m:
        raise ConfigError(f"state grid m={v.m} does not match grid m={grid.m}")
    if t > 1.0 + 1e-12:
        w = apply_T_volterra(sys, 1.0, v, tol=tol, grid=grid, max_iter=max_iter)
        return apply_T_volterra(sys, t - 1.0, w, tol=tol, grid=grid, max_iter=max_iter)
    if t == 0:
        return v

    n, m = sys.n, grid.m
    grid.require_divisible()
    dt = grid.dt
    count = int(round(t / dt))
    if count < 1 or abs(count * dt - t) > 1e-9:
        raise ConfigError(f"t = {t} is not a multiple of the quadrature step dt = {dt}")
    expAs = _expm_powers(sys.A, dt, count)
    phi = _phi_factors(sys, dt, count, expAs)
    psi = _psi_values(sys, v, dt, count, expAs)
    T0H = _T0_head_columns(sys, m, dt, count, expAs)
    t0v = apply_T0(sys, t, v).to_coords()

    wts = np.full(count + 1, dt)
    wts[0] = wts[-1] = 0.5 * dt
    # Phi vanishes below the shortest delay; skipping its zero samples turns
    # the single-delay-at-1 case into a one-term correction.
    phi_idx = np.nonzero(np.any(phi != 0, axis=(1, 2)))[0]

    H = T0H.copy()
    y_prev = None
    gap = None
    for _ in range(max_iter):
        y = t0v + np.einsum("j,jNa,ja->N", wts, H, psi[count::-1])
        if y_prev is not None:
            gap = _coord_norm(y - y_prev, n, m)
            if gap <= tol:
                return LiftedState.from_coords(y, n, m)
        y_prev = y
        Hn = T0H.copy()
        for i in range(1, count + 1):
            sel = phi_idx[phi_idx <= i]
            if sel.size:
                Hn[i] += np.einsum(
                    "j,jNa,jab->Nb", wts[i - sel], H[i - sel], phi[sel]
                )
        H = Hn
    raise ConvergenceError(
        f"Volterra iteration did not converge within {max_iter} sweeps", defect=gap
    )


def _coord_norm(coords, n, m):
    s = metric_sqrt(n, m)
    return float(np.linalg.norm(s * coords))


def cross_method_gap(sys: DelaySystem, t, v: LiftedState, grid: GridSpec, tol=1e-8):
    """Head difference between the Volterra and method-of-steps routes."""
    traj = simulate_steps(sys, v, max(t, grid.dt), grid)
    via_steps = traj.lifted_at(t, grid.m)
    via_volterra = apply_T_volterra(sys, t, v, tol=tol, grid=grid)
    head_gap = float(np.linalg.norm(via_steps.head - via_volterra.head))
    tail_gap = float(np.max(np.abs(via_steps.tail.values - via_volterra.tail.values)))
    return head_gap, tail_gap
