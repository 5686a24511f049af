# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled trilinear sampling kernel; semantics match kernels._pure."""

import numpy as np

cimport cython


@cython.boundscheck(False)
@cython.wraparound(False)
def sample_trilinear(const unsigned char[:, :, ::1] frame,
                     const double[:, ::1] coords,
                     double[::1] out):
    cdef Py_ssize_t n = coords.shape[0]
    cdef Py_ssize_t ni = frame.shape[0]
    cdef Py_ssize_t nj = frame.shape[1]
    cdef Py_ssize_t nk = frame.shape[2]
    cdef Py_ssize_t m, i0, j0, k0
    cdef double fi, fj, fk, di, dj, dk
    cdef double c00, c01, c10, c11, c0, c1
    # Matches kernels._pure.EDGE_TOL: boundary points survive round-trip error.
    cdef double tol = 1e-9

    with nogil:
        for m in range(n):
            fi = coords[m, 0]
            fj = coords[m, 1]
            fk = coords[m, 2]
            if (fi < -tol or fi > ni - 1 + tol or
                    fj < -tol or fj > nj - 1 + tol or
                    fk < -tol or fk > nk - 1 + tol):
                out[m] = 0.0
                continue
            if fi < 0.0:
                fi = 0.0
            elif fi > ni - 1:
                fi = ni - 1
            if fj < 0.0:
                fj = 0.0
            elif fj > nj - 1:
                fj = nj - 1
            if fk < 0.0:
                fk = 0.0
            elif fk > nk - 1:
                fk = nk - 1
            i0 = <Py_ssize_t>fi
            j0 = <Py_ssize_t>fj
            k0 = <Py_ssize_t>fk
            if i0 > ni - 2:
                i0 = ni - 2
            if j0 > nj - 2:
                j0 = nj - 2
            if k0 > nk - 2:
                k0 = nk - 2
            di = fi - i0
            dj = fj - j0
            dk = fk - k0
            c00 = frame[i0, j0, k0] * (1.0 - dk) + frame[i0, j0, k0 + 1] * dk
            c01 = frame[i0, j0 + 1, k0] * (1.0 - dk) + frame[i0, j0 + 1, k0 + 1] * dk
            c10 = frame[i0 + 1, j0, k0] * (1.0 - dk) + frame[i0 + 1, j0, k0 + 1] * dk
            c11 = frame[i0 + 1, j0 + 1, k0] * (1.0 - dk) + frame[i0 + 1, j0 + 1, k0 + 1] * dk
            c0 = c00 * (1.0 - dj) + c01 * dj
            c1 = c10 * (1.0 - dj) + c11 * dj
            out[m] = c0 * (1.0 - di) + c1 * di
