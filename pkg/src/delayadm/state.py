"""States of the lifted product space: head vector plus gridded history tail.

The history tail lives on the uniform grid sigma_j = -1 + j/m, j = 0..m
(node 0 at sigma = -1, node m at sigma = 0; the delay is normalized to 1).
L2 quantities use composite trapezoid quadrature on that grid, which is
exact for affine tails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, RangeError


def trapezoid_weights(m):
    """Composite trapezoid weights on m+1 uniform nodes spanning length 1."""
    w = np.full(m + 1, 1.0 / m)
    w[0] = w[-1] = 0.5 / m
    return w


@dataclass(frozen=True)
class HistorySegment:
    """Tail function f on [-1, 0], stored nodewise; shape (m+1, dim)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 2 or v.shape[0] < 2:
            raise DimensionError(f"history values must be (m+1, dim) with m >= 1, got {v.shape}")
        if not np.all(np.isfinite(v.view(float))):
            raise DimensionError("history contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def m(self):
        return self.values.shape[0] - 1

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def grid(self):
        return -1.0 + np.arange(self.m + 1) / self.m

    @classmethod
    def zeros(cls, m, dim):
        return cls(np.zeros((m + 1, dim), dtype=complex))

    @classmethod
    def constant(cls, x, m):
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        return cls(np.tile(x, (m + 1, 1)))

    @classmethod
    def from_function(cls, func, m, dim=None):
        """Sample sigma -> f(sigma); func returns a scalar or a vector."""
        grid = -1.0 + np.arange(m + 1) / m
        rows = [np.atleast_1d(np.asarray(func(s), dtype=complex)) for s in grid]
        vals = np.stack(rows)
        if dim is not None and vals.shape[1] != dim:
            raise DimensionError(f"function returned dim {vals.shape[1]}, expected {dim}")
        return cls(vals)

    def value_at(self, sigma):
        """Linear interpolation between nodes; sigma must lie in [-1, 0]."""
        if sigma < -1 - 1e-12 or sigma > 1e-12:
            raise RangeError(f"sigma = {sigma} outside [-1, 0]")
        pos = (sigma + 1.0) * self.m
        i0 = min(int(np.floor(pos)), self.m - 1)
        i0 = max(i0, 0)
        th = pos - i0
        return (1.0 - th) * self.values[i0] + th * self.values[i0 + 1]

    def sigma_derivative(self):
        """Nodewise d/dsigma: centered interior, one-sided at the ends."""
        v = self.values
        m = self.m
        d = np.empty_like(v)
        d[1:-1] = (v[2:] - v[:-2]) * (m / 2.0)
        d[0] = (v[1] - v[0]) * m
        d[-1] = (v[-1] - v[-2]) * m
        return HistorySegment(d)


@dataclass(frozen=True)
class LiftedState:
    """Element (x, f) of X x L2([-1,0], X).

    The compatibility condition f(0) = x is deliberately not an invariant:
    mild solutions and resolvent outputs violate it at the discrete level.
    Use is_in_domain to test generator-domain membership.
    """

    head: np.ndarray
    tail: HistorySegment

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.head, dtype=complex))
        if x.ndim != 1:
            raise DimensionError(f"head must be a vector, got shape {x.shape}")
        if not np.all(np.isfinite(x.view(float))):
            raise DimensionError("head contains non-finite values")
        if x.shape[0] != self.tail.dim:
            raise DimensionError(
                f"head dim {x.shape[0]} does not match tail dim {self.tail.dim}"
            )
        object.__setattr__(self, "head", x)

    @property
    def dim(self):
        return self.head.shape[0]

    @property
    def m(self):
        return self.tail.m

    def to_coords(self):
        return np.concatenate([self.head, self.tail.values.ravel()])

    @classmethod
    def from_coords(cls, coords, n, m):
        coords = np.asarray(coords, dtype=complex)
        if coords.shape != (n * (m + 2),):
            raise DimensionError(f"expected {n * (m + 2)} coordinates, got {coords.shape}")
        return cls(coords[:n], HistorySegment(coords[n:].reshape(m + 1, n)))

    def to_json_dict(self):
        return {
            "head": [[float(z.real), float(z.imag)] for z in self.head],
            "tail": {
                "m": self.m,
                "values": [
                    [[float(z.real), float(z.imag)] for z in row] for row in self.tail.values
                ],
            },
        }

    @classmethod
    def from_json_dict(cls, obj):
        head = np.array([complex(re, im) for re, im in obj["head"]])
        vals = np.array(
            [[complex(re, im) for re, im in row] for row in obj["tail"]["values"]]
        )
        if vals.shape[0] != obj["tail"]["m"] + 1:
            raise DimensionError("tail value count does not match m")
        return cls(head, HistorySegment(vals))


def inner(v, w):
    """<v, w> on the product space: <x,y>_X + trapezoid(<f,g>_X).

    Linear in the first argument, conjugate-linear in the second.
    """
    if v.dim != w.dim or v.m != w.m:
        raise DimensionError(
            f"state mismatch: dims {v.dim}/{w.dim}, grids m={v.m}/{w.m}"
        )
    head = np.sum(v.head * np.conj(w.head))
    wq = trapezoid_weights(v.m)
    tail = np.sum(wq[:, None] * v.tail.values * np.conj(w.tail.values))
    return complex(head + tail)


def lifted_norm(v):
    return float(np.sqrt(inner(v, v).real))


def is_in_domain(v, tol=1e-8):
    """f(0) = x up to tol * (1 + ||x||): membership of the generator domain."""
    gap = np.linalg.norm(v.tail.values[-1] - v.head)
    return gap <= tol * (1.0 + np.linalg.norm(v.head))


def metric_sqrt(n, m):
    """Square roots of the coordinate weights of the full lifted basis.

    Coordinate order is (head, tail node 0, ..., tail node m); scaling a
    coordinate matrix by these weights makes Euclidean norms equal lifted
    norms.
    """
    w = trapezoid_weights(m)
    return np.concatenate([np.ones(n), np.repeat(np.sqrt(w), n)])


def history_shift_defect(trajectory, t, dt, m):
    """|| (h_z(t+dt) - h_z(t))/dt - D_sigma z_t ||_{L2}.

    The trajectory only needs .state_at; any sampled solution on [-1, T]
    works.  Vanishes at rate O(dt + 1/m) for smooth z.
    """
    if dt <= 0:
        raise RangeError("dt must be positive")
    for s in (t, t + dt):
        if s < 0 or s > trajectory.t_end + 1e-12:
            raise RangeError(f"time {s} outside the sampled range [0, {trajectory.t_end}]")
    seg_now = trajectory.history_at(t, m)
    seg_next = trajectory.history_at(t + dt, m)
    quot = (seg_next.values - seg_now.values) / dt
    dsig = seg_now.sigma_derivative().values
    wq = trapezoid_weights(m)
    diff = quot - dsig
    return float(np.sqrt(np.sum(wq[:, None] * np.abs(diff) ** 2).real))


def least_concave_majorant(xs, ys):
    """Upper convex hull values of (xs, ys) at each xs (monotone chain).

    xs must be strictly increasing.  The returned array dominates ys and is
    concave as a piecewise-linear function of xs.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size == 0:
        raise DimensionError("need matching nonempty 1-D abscissae and values")
    if np.any(np.diff(xs) <= 0):
        raise DomainError("abscissae must be strictly increasing")
    hull = []  # indices of upper hull vertices
    for i in range(len(xs)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (xs[i1] - xs[i0]) * (ys[i] - ys[i0]) - (ys[i1] - ys[i0]) * (xs[i] - xs[i0])
            if cross >= 0:  # middle point below the chord: drop it
                hull.pop()
            else:
                break
        hull.append(i)
    env = np.empty_like(ys)
    for a, b in zip(hull[:-1], hull[1:]):
        sl = slice(a, b + 1)
        th = (xs[sl] - xs[a]) / (xs[b] - xs[a])
        env[sl] = (1 - th) * ys[a] + th * ys[b]
    env[hull[-1]] = ys[hull[-1]]
    return np.maximum(env, ys)
