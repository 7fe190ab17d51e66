# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 delay stepper (hot kernel).

Mirrors _stepper_py.rk4_delay_batch; see there for the contract.  The
small-matrix products are hand-rolled: for the n <= 8 systems the bound
sweeps use, loop overhead dominates BLAS gains.
"""

import numpy as np

from libc.math cimport floor

ctypedef double complex cplx


cdef inline void _lerp(cplx[:, :, ::1] Z, double pos, Py_ssize_t imax,
                       cplx[:, ::1] out):
    cdef Py_ssize_t i0 = <Py_ssize_t>floor(pos)
    cdef double th = pos - i0
    cdef Py_ssize_t i1, r, c
    cdef Py_ssize_t rows = Z.shape[1], cols = Z.shape[2]
    if th <= 1e-12:
        for r in range(rows):
            for c in range(cols):
                out[r, c] = Z[i0, r, c]
    else:
        i1 = i0 + 1
        if i1 > imax:
            i1 = i0
        for r in range(rows):
            for c in range(cols):
                out[r, c] = (1.0 - th) * Z[i0, r, c] + th * Z[i1, r, c]


cdef inline void _gemm_acc(cplx[:, ::1] M, cplx[:, ::1] X, cplx[:, ::1] out):
    # out += M @ X
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t n = M.shape[0], nk = M.shape[1], N = X.shape[1]
    cdef cplx mik
    for i in range(n):
        for k in range(nk):
            mik = M[i, k]
            if mik == 0:
                continue
            for j in range(N):
                out[i, j] = out[i, j] + mik * X[k, j]


cdef inline void _zero(cplx[:, ::1] buf):
    cdef Py_ssize_t i, j
    for i in range(buf.shape[0]):
        for j in range(buf.shape[1]):
            buf[i, j] = 0


def rk4_delay_batch(A, delay_mats, delay_offsets, B, Z, U, start, steps, dt):
    cdef cplx[:, ::1] Av = np.ascontiguousarray(A, dtype=complex)
    cdef cplx[:, :, ::1] Dv = np.ascontiguousarray(delay_mats, dtype=complex)
    cdef double[::1] offs = np.ascontiguousarray(delay_offsets, dtype=float)
    cdef cplx[:, :, ::1] Zv = Z
    cdef bint has_u = B is not None
    cdef cplx[:, ::1] Bv
    cdef cplx[:, :, ::1] Uv
    cdef Py_ssize_t n = Zv.shape[1], N = Zv.shape[2], K = Dv.shape[0]
    cdef Py_ssize_t last = Zv.shape[0] - 1
    cdef Py_ssize_t p = 0
    if has_u:
        Bv = np.ascontiguousarray(B, dtype=complex)
        Uv = U
        p = Bv.shape[1]

    buf = np.zeros((8, n, N), dtype=complex)
    cdef cplx[:, :, ::1] bufv = buf
    cdef cplx[:, ::1] d0 = bufv[0], dh = bufv[1], d1 = bufv[2]
    cdef cplx[:, ::1] zd = bufv[3], y = bufv[4], kacc = bufv[5]
    cdef cplx[:, ::1] know = bufv[6], ksum = bufv[7]
    ubuf = np.zeros((max(p, 1), N), dtype=complex)
    cdef cplx[:, ::1] ud = ubuf

    cdef Py_ssize_t i0 = start, nsteps = steps
    cdef double h = dt, half = 0.5 * dt, sixth = dt / 6.0
    cdef Py_ssize_t i, s, k, r, c
    cdef double coff
    cdef cplx[:, ::1] dst

    for i in range(i0, i0 + nsteps):
        for s in range(3):
            coff = 0.0 if s == 0 else (0.5 if s == 1 else 1.0)
            dst = d0 if s == 0 else (dh if s == 1 else d1)
            _zero(dst)
            for k in range(K):
                _lerp(Zv, i + coff - offs[k], i, zd)
                _gemm_acc(Dv[k], zd, dst)
            if has_u:
                _lerp(Uv, i + coff, last, ud)
                _gemm_acc(Bv, ud, dst)
        # k1
        for r in range(n):
            for c in range(N):
                know[r, c] = d0[r, c]
        _gemm_acc(Av, Zv[i], know)
        for r in range(n):
            for c in range(N):
                ksum[r, c] = know[r, c]
                y[r, c] = Zv[i, r, c] + half * know[r, c]
        # k2
        for r in range(n):
            for c in range(N):
                kacc[r, c] = dh[r, c]
        _gemm_acc(Av, y, kacc)
        for r in range(n):
            for c in range(N):
                ksum[r, c] = ksum[r, c] + 2.0 * kacc[r, c]
                y[r, c] = Zv[i, r, c] + half * kacc[r, c]
        # k3
        for r in range(n):
            for c in range(N):
                know[r, c] = dh[r, c]
        _gemm_acc(Av, y, know)
        for r in range(n):
            for c in range(N):
                ksum[r, c] = ksum[r, c] + 2.0 * know[r, c]
                y[r, c] = Zv[i, r, c] + h * know[r, c]
        # k4
        for r in range(n):
            for c in range(N):
                kacc[r, c] = d1[r, c]
        _gemm_acc(Av, y, kacc)
        for r in range(n):
            for c in range(N):
                Zv[i + 1, r, c] = Zv[i, r, c] + sixth * (ksum[r, c] + kacc[r, c])
