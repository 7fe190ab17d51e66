"""Discretized lifted generator, its adjoint, and the duality pairing.

The generator acts as (x, f) -> (A x + Psi f, f') with the compatibility
condition f(0) = x; its adjoint acts as (y, g) -> (A* y, Psi* y - g') on
tails vanishing at both endpoints.  Square matrices live on reduced
coordinates (compatibility node fused into the head for the generator,
endpoint nodes eliminated for the adjoint); the pairing check applies the
block formulas on the full grid so no boundary information is lost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .state import HistorySegment, LiftedState, inner, trapezoid_weights
from .system import DelaySystem, GridSpec


@dataclass(frozen=True)
class DiscreteGenerator:
    """Matrix on reduced lifted coordinates plus the metric that squares
    coordinate Euclidean norms into lifted norms."""

    matrix: np.ndarray
    metric: np.ndarray
    boundary_spec: str
    n: int
    m: int

    def __post_init__(self):
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise DomainError("reduced generator must be square")
        if self.metric.shape != (self.matrix.shape[0],):
            raise DomainError("metric length must match the reduced dimension")
        if np.any(self.metric <= 0):
            raise DomainError("metric weights must be positive")

    def weighted(self):
        s = np.sqrt(self.metric)
        return s[:, None] * self.matrix / s[None, :]


def _delay_node_terms(sys: DelaySystem, m):
    """Interpolation stencil of f(-h_k): list of (A_k, node, coefficient)."""
    out = []
    for Ak, hk in sys.delays:
        q = m * (1.0 - hk)
        lo = int(np.floor(q + 1e-9))
        th = q - lo
        if th < 1e-9:
            out.append((Ak, lo, 1.0))
        else:
            out.append((Ak, lo, 1.0 - th))
            out.append((Ak, lo + 1, th))
    return out


def assemble_generator(sys: DelaySystem, grid: GridSpec):
    """Block [A, Psi; 0, d/dsigma] with f(0) eliminated by substituting x.

    d/dsigma is the one-sided upwind difference toward sigma = 0 (the
    transport direction of the history window).
    """
    n, m = sys.n, grid.m
    w = trapezoid_weights(m)
    N = n * (m + 1)  # coords: x, f_0 .. f_{m-1}
    M = np.zeros((N, N), dtype=complex)
    M[:n, :n] = sys.A
    for Ak, node, coef in _delay_node_terms(sys, m):
        if node >= m:
            M[:n, :n] += coef * Ak  # lands on the fused f(0) = x node
        else:
            M[:n, n * (node + 1) : n * (node + 2)] += coef * Ak
    eye = np.eye(n)
    for j in range(m):
        row = slice(n * (j + 1), n * (j + 2))
        M[row, n * (j + 1) : n * (j + 2)] -= m * eye
        if j + 1 == m:
            M[row, :n] += m * eye
        else:
            M[row, n * (j + 2) : n * (j + 3)] += m * eye
    metric = np.concatenate([np.full(n, 1.0 + w[m]), np.repeat(w[:m], n)])
    return DiscreteGenerator(M, metric, "f(0)=x", n, m)


def assemble_adjoint(sys: DelaySystem, grid: GridSpec):
    """Block [A*, 0; Psi*, -d/dsigma] on tails with g(-1) = g(0) = 0.

    Psi* places A_k* y at the -h_k node scaled by the inverse quadrature
    weight (discrete Riesz representative of point evaluation); injections
    falling on the eliminated endpoint nodes are dropped here but kept by
    apply_adjoint, which works on the full grid.
    """
    n, m = sys.n, grid.m
    w = trapezoid_weights(m)
    N = n * m  # coords: y, g_1 .. g_{m-1}
    M = np.zeros((N, N), dtype=complex)
    M[:n, :n] = sys.A.conj().T
    for Ak, node, coef in _delay_node_terms(sys, m):
        if 1 <= node <= m - 1:
            M[n * node : n * (node + 1), :n] += (coef / w[node]) * Ak.conj().T
    eye = np.eye(n)
    for j in range(1, m):
        row = slice(n * j, n * (j + 1))
        M[row, n * j : n * (j + 1)] -= m * eye
        if j - 1 >= 1:
            M[row, n * (j - 1) : n * j] += m * eye
    metric = np.concatenate([np.ones(n), np.repeat(w[1:m], n)])
    return DiscreteGenerator(M, metric, "g(-1)=g(0)=0", n, m)


def apply_generator(sys: DelaySystem, v: LiftedState):
    """Full-grid block action (A x + Psi f, D_sigma f), upwind stencil."""
    f = v.tail.values
    m = v.m
    head = sys.A @ v.head + sys.delay_operator(v.tail)
    tail = np.empty_like(f)
    tail[:-1] = (f[1:] - f[:-1]) * m
    tail[-1] = (f[-1] - f[-2]) * m
    return LiftedState(head, HistorySegment(tail))


def apply_adjoint(sys: DelaySystem, w: LiftedState):
    """Full-grid block action (A* y, Psi* y - D_sigma g), mirrored stencil."""
    g = w.tail.values
    m = w.m
    wq = trapezoid_weights(m)
    head = sys.A.conj().T @ w.head
    tail = np.empty_like(g)
    tail[1:] = -(g[1:] - g[:-1]) * m
    tail[0] = -(g[1] - g[0]) * m
    for Ak, node, coef in _delay_node_terms(sys, m):
        tail[node] += (coef / wq[node]) * (Ak.conj().T @ w.head)
    return LiftedState(head, HistorySegment(tail))


def pairing_defect(sys: DelaySystem, grid: GridSpec, v: LiftedState, w: LiftedState, precond_tol=1e-6, check_preconditions=True):
    """|<Av, w> - <v, A*w>| under the quadrature metric.

    Requires v compatible (f(0) = x), w with vanishing tail endpoints, and
    both tails smooth; O(1/m) for admissible smooth pairs.  Pass
    check_preconditions=False to probe inadmissible pairs (for instance
    zero-tail states, where the defect reduces to the exact matrix adjoint
    identity, or deliberate boundary violations).
    """
    if check_preconditions:
        scale_v = 1.0 + float(np.max(np.abs(v.head)))
        if np.max(np.abs(v.tail.values[-1] - v.head)) > precond_tol * scale_v:
            raise DomainError("pairing precondition failed: f(0)=x violated for v")
        scale_w = 1.0 + float(np.max(np.abs(w.head)))
        if np.max(np.abs(w.tail.values[0])) > precond_tol * scale_w:
            raise DomainError("pairing precondition failed: g(-1)=0 violated for w")
        if np.max(np.abs(w.tail.values[-1])) > precond_tol * scale_w:
            raise DomainError("pairing precondition failed: g(0)=0 violated for w")
        for name, seg in (("v", v.tail), ("w", w.tail)):
            d2 = np.abs(np.diff(seg.values, n=2, axis=0)) * seg.m**2
            cap = 1e3 * (1.0 + float(np.max(np.abs(seg.values))))
            if d2.size and np.max(d2) > cap:
                raise DomainError(f"pairing precondition failed: tail of {name} is not smooth")
    left = inner(apply_generator(sys, v), w)
    right = inner(v, apply_adjoint(sys, w))
    return float(abs(left - right))


def generator_spectrum(gen: DiscreteGenerator):
    return np.linalg.eigvals(gen.matrix)


def nearest_eigenvalue(gen: DiscreteGenerator, target):
    """Eigenvalue of the reduced generator closest to the target."""
    eigs = generator_spectrum(gen)
    return complex(eigs[np.argmin(np.abs(eigs - target))])
