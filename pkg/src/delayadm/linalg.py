"""Dense complex linear-algebra kernels: expm, solve, op_norm.

Everything here works on complex128 ndarrays.  Real input is promoted, so
the rest of the package can stay on a single complex code path (resolvent
sweeps need it anyway).
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, RangeError, SingularMatrixError

# Pade-13 numerator coefficients and the matching scaling threshold
# (classic scaling-and-squaring constants for double precision).
_PADE13_B = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152
_MAX_SQUARINGS = 60


def as_cmatrix(A, square=False, name="matrix"):
    """Validate and promote to a complex128 2-D array."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2 or M.size == 0:
        raise DimensionError(f"{name} must be a nonempty 2-D array, got shape {M.shape}")
    if square and M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M.view(float))):
        raise DimensionError(f"{name} contains non-finite entries")
    return M


def as_cvector(b, name="vector"):
    v = np.asarray(b, dtype=complex)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"{name} must be a nonempty 1-D array, got shape {v.shape}")
    if not np.all(np.isfinite(v.view(float))):
        raise DimensionError(f"{name} contains non-finite entries")
    return v


def expm(A, t=1.0):
    """e^{tA} by Pade-13 scaling and squaring.

    Relative accuracy is ~1e-13 in operator norm for ||tA|| up to ~1e2;
    the scaling exponent is capped, and larger arguments raise RangeError.
    """
    M = as_cmatrix(A, square=True, name="expm argument")
    if t < 0:
        raise RangeError(f"expm requires t >= 0, got {t}")
    M = t * M
    nrm = np.linalg.norm(M, 1)
    if not np.isfinite(nrm):
        raise RangeError("expm argument overflowed while scaling")
    if nrm == 0.0:
        return np.eye(M.shape[0], dtype=complex)
    s = 0
    if nrm > _THETA13:
        s = int(np.ceil(np.log2(nrm / _THETA13)))
        if s > _MAX_SQUARINGS:
            raise RangeError(f"||tA|| = {nrm:.3e} too large for scaling-and-squaring")
        M = M / (2.0**s)
    b = _PADE13_B
    n = M.shape[0]
    ident = np.eye(n, dtype=complex)
    M2 = M @ M
    M4 = M2 @ M2
    M6 = M4 @ M2
    U = M @ (
        M6 @ (b[13] * M6 + b[11] * M4 + b[9] * M2)
        + b[7] * M6
        + b[5] * M4
        + b[3] * M2
        + b[1] * ident
    )
    V = (
        M6 @ (b[12] * M6 + b[10] * M4 + b[8] * M2)
        + b[6] * M6
        + b[4] * M4
        + b[2] * M2
        + b[0] * ident
    )
    R = solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


def lu_factor(M, pivot_rtol=1e-14):
    """LU with partial pivoting; raises SingularMatrixError on tiny pivots."""
    A = as_cmatrix(M, square=True, name="lu argument").copy()
    n = A.shape[0]
    scale = np.max(np.abs(A))
    if scale == 0.0:
        raise SingularMatrixError("matrix is identically zero", pivot=0.0)
    piv = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if abs(A[p, k]) < pivot_rtol * scale:
            raise SingularMatrixError(
                f"pivot {abs(A[p, k]):.3e} below {pivot_rtol:.1e} * scale at column {k}",
                pivot=abs(A[p, k]),
            )
        if p != k:
            A[[k, p]] = A[[p, k]]
            piv[[k, p]] = piv[[p, k]]
        A[k + 1 :, k] /= A[k, k]
        A[k + 1 :, k + 1 :] -= np.outer(A[k + 1 :, k], A[k, k + 1 :])
    return A, piv


def lu_solve(lu, piv, b):
    A = lu
    n = A.shape[0]
    x = np.asarray(b, dtype=complex)
    vector = x.ndim == 1
    if vector:
        x = x[:, None]
    if x.shape[0] != n:
        raise DimensionError(f"rhs has {x.shape[0]} rows, matrix is {n}x{n}")
    x = x[piv].copy()
    for k in range(1, n):  # forward: L has unit diagonal
        x[k] -= A[k, :k] @ x[:k]
    for k in range(n - 1, -1, -1):  # backward
        x[k] -= A[k, k + 1 :] @ x[k + 1 :]
        x[k] /= A[k, k]
    return x[:, 0] if vector else x


def solve(M, b):
    """Solve M x = b (b may be a vector or a block of columns)."""
    lu, piv = lu_factor(M)
    return lu_solve(lu, piv, b)


def op_norm(M, tol=1e-12, max_iter=5000):
    """Largest singular value via power iteration on M*M.

    Starts from the normalized all-ones vector (deterministic); after
    convergence a few seeded random probes guard against a start vector
    accidentally orthogonal to the top singular space.
    """
    sigma, _ = op_norm_with_vector(M, tol=tol, max_iter=max_iter)
    return sigma


def op_norm_with_vector(M, tol=1e-12, max_iter=5000):
    """As op_norm, but also returns a maximizing unit input vector."""
    A = as_cmatrix(M, name="op_norm argument")
    ncols = A.shape[1]
    x0 = np.ones(ncols, dtype=complex) / np.sqrt(ncols)
    sigma, x = _power_iterate(A, x0, tol, max_iter)
    rng = np.random.default_rng(20240229)
    for _ in range(4):
        v = rng.standard_normal(ncols) + 1j * rng.standard_normal(ncols)
        v /= np.linalg.norm(v)
        if np.linalg.norm(A @ v) > sigma * (1 + 1e-9):
            sigma, x = _power_iterate(A, v, tol, max_iter)
    return sigma, x


def _power_iterate(A, x, tol, max_iter):
    sigma = 0.0
    stable = 0
    for _ in range(max_iter):
        y = A @ x
        s_new = np.linalg.norm(y)
        if s_new == 0.0:
            return 0.0, x
        z = A.conj().T @ y
        nz = np.linalg.norm(z)
        x = z / nz
        if abs(s_new - sigma) <= tol * max(s_new, 1e-300):
            stable += 1
            if stable >= 2:
                sigma = s_new
                break
        else:
            stable = 0
        sigma = s_new
    return sigma, x


def hermitian_part_abscissa(A):
    """Largest eigenvalue of (A + A*)/2: the numerically certified growth bound."""
    M = as_cmatrix(A, square=True)
    H = 0.5 * (M + M.conj().T)
    return float(np.linalg.eigvalsh(H)[-1])
