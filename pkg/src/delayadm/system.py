"""System and grid descriptions shared by the solvers.

A DelaySystem bundles the undelayed generator A, the delay pairs
(A_k, h_k) with h_k in (0, 1], and the control operator B, together with
a numerically certified growth bound omega0 = max eig((A + A*)/2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ConfigError, DimensionError, RangeError
from .state import HistorySegment, LiftedState


@dataclass(frozen=True)
class GridSpec:
    """History/time discretization: m+1 tail nodes, simulation step dt.

    dt defaults to 1/(2m) so that delayed lookups mostly hit stored nodes.
    The CLI enforces that dt divides 1/m; trajectory readback interpolates,
    so internal callers may use incompatible pairs deliberately.
    """

    m: int = 200
    dt: float = None

    def __post_init__(self):
        if self.m < 2:
            raise ConfigError(f"need m >= 2 history intervals, got {self.m}")
        if self.dt is None:
            object.__setattr__(self, "dt", 1.0 / (2 * self.m))
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")

    @property
    def divisible(self):
        r = 1.0 / (self.m * self.dt)
        return r >= 1 - 1e-9 and abs(r - round(r)) < 1e-9

    def require_divisible(self):
        if not self.divisible:
            raise ConfigError(
                f"dt = {self.dt} does not divide the history spacing 1/{self.m}"
            )

    def refined(self, factor=2):
        return GridSpec(self.m * factor, self.dt / factor)

    def coarsened(self, factor=2):
        """Companion grid for refinement-delta estimates (slack policy)."""
        return GridSpec(max(2, self.m // factor), self.dt * factor)


@dataclass(frozen=True)
class DelaySystem:
    """The tuple (A, {(A_k, h_k)}, B) with contraction certificate omega0."""

    A: np.ndarray
    delays: tuple = ()
    B: np.ndarray = None
    omega0: float = None

    def __post_init__(self):
        A = linalg.as_cmatrix(self.A, square=True, name="A")
        n = A.shape[0]
        if not self.delays:
            raise DimensionError("delays must be a nonempty list of (A_k, h_k) pairs")
        pairs = []
        for k, (Ak, hk) in enumerate(self.delays):
            Ak = linalg.as_cmatrix(Ak, square=True, name=f"A_{k + 1}")
            if Ak.shape[0] != n:
                raise DimensionError(f"A_{k + 1} is {Ak.shape[0]}x..., A is {n}x{n}")
            hk = float(hk)
            if not 0 < hk <= 1:
                raise RangeError(f"delay h_{k + 1} = {hk} outside (0, 1]")
            pairs.append((Ak, hk))
        pairs.sort(key=lambda p: p[1])
        B = self.B
        if B is None:
            B = np.zeros((n, 0), dtype=complex)
        else:
            B = np.asarray(B, dtype=complex)
            if B.ndim == 1:
                B = B[:, None]
            if B.ndim != 2 or B.shape[0] != n:
                raise DimensionError(f"B must have {n} rows, got shape {B.shape}")
        omega0 = self.omega0
        if omega0 is None:
            omega0 = linalg.hermitian_part_abscissa(A)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "delays", tuple(pairs))
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "omega0", float(omega0))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.B.shape[1]

    @property
    def contraction_certified(self):
        return self.omega0 <= 1e-10

    def require_contraction(self):
        if not self.contraction_certified:
            raise ConfigError(
                f"system is not contraction-certified: omega0 = {self.omega0:.3e} > 0"
            )

    def undelayed(self):
        """Same system with every delay matrix zeroed (keeps the lags)."""
        zeroed = tuple((np.zeros_like(Ak), hk) for Ak, hk in self.delays)
        return DelaySystem(self.A, zeroed, self.B, self.omega0)

    def scaled_delay(self, factor):
        scaled = tuple((factor * Ak, hk) for Ak, hk in self.delays)
        return DelaySystem(self.A, scaled, self.B, self.omega0)

    def delay_operator(self, tail: HistorySegment):
        """Psi(f) = sum_k A_k f(-h_k), delayed lookups interpolated."""
        out = np.zeros(self.n, dtype=complex)
        for Ak, hk in self.delays:
            out += Ak @ tail.value_at(-hk)
        return out


@dataclass(frozen=True)
class Trajectory:
    """Solution samples z(t_j) on t_j = t0 + j dt, covering [-1, T]."""

    samples: np.ndarray
    dt: float
    t0: float = -1.0
    u: np.ndarray = None

    def __post_init__(self):
        z = np.asarray(self.samples, dtype=complex)
        if z.ndim != 2 or z.shape[0] < 2:
            raise DimensionError(f"samples must be (steps, n), got {z.shape}")
        object.__setattr__(self, "samples", z)

    @property
    def n(self):
        return self.samples.shape[1]

    @property
    def t_end(self):
        return self.t0 + (self.samples.shape[0] - 1) * self.dt

    @property
    def times(self):
        return self.t0 + np.arange(self.samples.shape[0]) * self.dt

    def state_at(self, t):
        """Linear interpolation of the stored samples at time t."""
        pos = (t - self.t0) / self.dt
        if pos < -1e-9 or pos > self.samples.shape[0] - 1 + 1e-9:
            raise RangeError(f"t = {t} outside the sampled range")
        i0 = int(np.floor(pos))
        i0 = min(max(i0, 0), self.samples.shape[0] - 2)
        th = pos - i0
        return (1.0 - th) * self.samples[i0] + th * self.samples[i0 + 1]

    def history_at(self, t, m):
        vals = np.stack([self.state_at(t - 1.0 + j / m) for j in range(m + 1)])
        return HistorySegment(vals)

    def lifted_at(self, t, m):
        return LiftedState(self.state_at(t), self.history_at(t, m))

    def to_csv(self, path, fmt=lambda x: f"{x:.16e}"):
        cols = ["t"]
        for i in range(self.n):
            cols += [f"re(z_{i + 1})", f"im(z_{i + 1})"]
        lines = [",".join(cols)]
        for t, row in zip(self.times, self.samples):
            cells = [fmt(t)]
            for z in row:
                cells += [fmt(z.real), fmt(z.imag)]
            lines.append(",".join(cells))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def random_contraction_system(seed, n, delay_norm=0.5, h=1.0, p=0):
    """Seeded random system with a certified contraction generator.

    A = skew-Hermitian + negative-semidefinite, so max eig((A+A*)/2) <= 0
    by construction; A_1 is scaled to the requested operator norm.
    """
    rng = np.random.default_rng(seed)

    def cmat():
        return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))

    G = cmat()
    S = 0.5 * (G - G.conj().T)
    H = cmat() / np.sqrt(n)
    A = S - H.conj().T @ H
    A1 = cmat()
    nrm = linalg.op_norm(A1)
    A1 = A1 * (delay_norm / nrm) if nrm > 0 else A1
    B = None
    if p:
        B = rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p))
    return DelaySystem(A, ((A1, h),), B)
