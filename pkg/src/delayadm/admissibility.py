"""Admissibility of the control operator: direct constants and the
resolvent (Weiss-type) criterion.

Solving (lam - A)(x, f) = (B u, 0) on the lifted space forces the tail
f(sigma) = e^{lam sigma} x and the head equation Delta(lam) x = B u with the
delay characteristic matrix Delta(lam) = lam I - A - sum_k A_k e^{-lam h_k}.
That gives a closed analytic form for the resolvent norm, cross-checked
against the discretized lifted resolvent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import adjoint, linalg, semigroup
from .errors import RangeError, SingularMatrixError
from .state import metric_sqrt
from .system import DelaySystem, GridSpec


@dataclass(frozen=True)
class ResolventSample:
    """||(lam - A)^{-1} B|| with the Weiss weight sqrt(Re lam - omega)."""

    lam: complex
    norm: float
    weighted: float
    method: str


@dataclass(frozen=True)
class SweepRegion:
    """Discretization of the half-plane Re lam > omega for the sweep."""

    re_points: np.ndarray
    im_points: np.ndarray
    delta: float
    radius: float
    im_max: float

    @classmethod
    def default(cls, omega_ref, delta=1e-2, radius=100.0, im_max=20.0, n_re=25, n_im=21):
        if delta <= 0 or radius <= delta or im_max < 0:
            raise RangeError("need 0 < delta < radius and im_max >= 0")
        re = omega_ref + np.geomspace(delta, radius, n_re)
        im = np.linspace(-im_max, im_max, n_im) if n_im > 1 else np.zeros(1)
        return cls(re, im, delta, radius, im_max)


def characteristic_matrix(sys: DelaySystem, lam):
    """Delta(lam) = lam I - A - sum_k A_k e^{-lam h_k}."""
    lam = complex(lam)
    D = lam * np.eye(sys.n, dtype=complex) - sys.A
    for Ak, hk in sys.delays:
        D -= np.exp(-lam * hk) * Ak
    return D


def _kappa(re_lam):
    """Squared L2 norm of sigma -> e^{lam sigma} on [-1, 0]; limit 1 at 0."""
    a = 2.0 * re_lam
    if abs(a) < 1e-12:
        return 1.0 - 0.5 * a
    return float(-np.expm1(-a) / a)


def resolvent_norm_analytic(sys: DelaySystem, lam, omega_ref=0.0):
    """Closed-form ||(lam - A)^{-1} B||: sigma_max(Delta^{-1} B) sqrt(1 + kappa)."""
    lam = complex(lam)
    if lam.real <= omega_ref:
        raise RangeError(f"need Re lam > omega_ref, got {lam} with omega {omega_ref}")
    if sys.p == 0:
        return ResolventSample(lam, 0.0, 0.0, "analytic")
    D = characteristic_matrix(sys, lam)
    try:
        X = linalg.solve(D, sys.B)
    except SingularMatrixError as err:
        raise SingularMatrixError(
            f"characteristic matrix singular at lam = {lam}", pivot=err.pivot, lam=lam
        ) from err
    nrm = linalg.op_norm(X) * np.sqrt(1.0 + _kappa(lam.real))
    weighted = float(np.sqrt(lam.real - omega_ref) * nrm)
    return ResolventSample(lam, float(nrm), weighted, "analytic")


def resolvent_norm_discrete(sys: DelaySystem, lam, grid: GridSpec, omega_ref=0.0):
    """Discretized-oracle counterpart on the reduced lifted coordinates."""
    lam = complex(lam)
    if lam.real <= omega_ref:
        raise RangeError(f"need Re lam > omega_ref, got {lam} with omega {omega_ref}")
    if sys.p == 0:
        return ResolventSample(lam, 0.0, 0.0, "discrete")
    gen = adjoint.assemble_generator(sys, grid)
    N = gen.matrix.shape[0]
    rhs = np.zeros((N, sys.p), dtype=complex)
    rhs[: sys.n] = sys.B
    try:
        sol = linalg.solve(lam * np.eye(N, dtype=complex) - gen.matrix, rhs)
    except SingularMatrixError as err:
        raise SingularMatrixError(
            f"discrete resolvent singular at lam = {lam}", pivot=err.pivot, lam=lam
        ) from err
    nrm = linalg.op_norm(np.sqrt(gen.metric)[:, None] * sol)
    weighted = float(np.sqrt(lam.real - omega_ref) * nrm)
    return ResolventSample(lam, float(nrm), weighted, "discrete")


def weiss_constant(sys: DelaySystem, omega_ref, region: SweepRegion, refine_iters=48):
    """Supremum estimate of sqrt(Re lam - omega) ||(lam-A)^{-1}B|| over the sweep.

    Grid maximum plus golden-section refinement along the Re and Im axes;
    the returned value is a certified lower bound of the true supremum.
    Singular grid points are skipped and recorded.
    """
    samples = []
    skipped = []
    best = None
    for re in region.re_points:
        for im in region.im_points:
            lam = complex(re, im)
            try:
                s = resolvent_norm_analytic(sys, lam, omega_ref)
            except SingularMatrixError:
                skipped.append(lam)
                continue
            samples.append(s)
            if best is None or s.weighted > best.weighted:
                best = s
    if best is None or best.weighted == 0.0:
        lam0 = complex(region.re_points[0], 0.0)
        return WeissResult(0.0, lam0, tuple(samples), tuple(skipped), omega_ref)

    def value(re, im):
        try:
            return resolvent_norm_analytic(sys, complex(re, im), omega_ref).weighted
        except SingularMatrixError:
            return -np.inf

    re0, im0 = best.lam.real, best.lam.imag
    re_lo, re_hi = _bracket(region.re_points, re0)
    re_best, val = _golden(lambda r: value(r, im0), re_lo, re_hi, refine_iters)
    if val < best.weighted:
        re_best, val = re0, best.weighted
    im_lo, im_hi = _bracket(region.im_points, im0)
    if im_hi > im_lo:
        im_best, val2 = _golden(lambda s: value(re_best, s), im_lo, im_hi, refine_iters)
        if val2 > val:
            im0, val = im_best, val2
    arg = complex(re_best, im0)
    return WeissResult(float(max(val, best.weighted)), arg, tuple(samples), tuple(skipped), omega_ref)


@dataclass(frozen=True)
class WeissResult:
    c_est: float
    argmax_lam: complex
    samples: tuple
    skipped: tuple
    omega_ref: float


def _bracket(points, x0):
    pts = np.sort(np.asarray(points, dtype=float))
    i = int(np.searchsorted(pts, x0))
    lo = pts[max(i - 1, 0)]
    hi = pts[min(i + 1, len(pts) - 1)]
    return float(min(lo, x0)), float(max(hi, x0))


def _golden(fn, lo, hi, iters):
    """Deterministic golden-section maximization on [lo, hi]."""
    if hi <= lo:
        return lo, fn(lo)
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    x = c if fc >= fd else d
    return float(x), float(max(fc, fd))


def finite_time_constant(sys: DelaySystem, tau, grid: GridSpec):
    """Direct admissibility constants over the horizon tau.

    Simulates the response to nodal-hat inputs (spacing 1/m) from zero
    initial data and returns the largest singular value of the discrete
    input-to-state map in the L2(0,tau;U) -> lifted-space geometry, both
    for the full lifted output (c_full) and the head block only (c_head).
    """
    if tau <= 0:
        raise RangeError(f"tau must be positive, got {tau}")
    if sys.p == 0:
        return 0.0, 0.0
    n, m, p = sys.n, grid.m, sys.p
    grid.require_divisible()
    nodes = int(round(tau * m)) + 1  # input nodes at spacing 1/m on [0, tau]
    if nodes < 2:
        raise RangeError("tau must cover at least one input node spacing 1/m")
    steps = int(round(tau / grid.dt))
    K = int(round(1.0 / (m * grid.dt)))
    j0 = int(round(1.0 / grid.dt))
    total = j0 + steps + 1
    C = nodes * p
    U = np.zeros((total, p, C), dtype=complex)
    rows = np.arange(steps + 1, dtype=float)
    for node in range(nodes):
        hat = np.clip(1.0 - np.abs(rows - node * K) / K, 0.0, 1.0)
        for ch in range(p):
            U[j0:, ch, node * p + ch] = hat
    heads = np.zeros((n, C), dtype=complex)
    tails = np.zeros((m + 1, n, C), dtype=complex)
    Z, j0 = semigroup.simulate_batch(sys, grid, heads, tails, tau, U)
    M = semigroup._read_matrix(Z, j0, grid, m, tau)
    win = np.full(nodes, 1.0 / m)  # trapezoid weights of the input grid
    win[0] = win[-1] = 0.5 / m
    in_scale = np.repeat(np.sqrt(win), p)
    out_scale = metric_sqrt(n, m)
    weighted = out_scale[:, None] * M / in_scale[None, :]
    c_full = linalg.op_norm(weighted)
    c_head = linalg.op_norm(weighted[:n])
    return float(c_full), float(c_head)
