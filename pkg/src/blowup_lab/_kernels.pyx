# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tridiagonal kernels used by the Newton and inverse-iteration loops."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def solve_tridiagonal(const double[::1] lower, const double[::1] diag,
                      const double[::1] upper, const double[::1] rhs):
    """Thomas algorithm; ``lower[0]`` and ``upper[n-1]`` are ignored."""
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef double m, denom
    if n == 0:
        return np.empty(0)
    cdef double[::1] c = np.empty(n)
    cdef double[::1] d = np.empty(n)
    out = np.empty(n)
    cdef double[::1] x = out
    denom = diag[0]
    if denom == 0.0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    c[0] = upper[0] / denom if n > 1 else 0.0
    d[0] = rhs[0] / denom
    for i in range(1, n):
        denom = diag[i] - lower[i] * c[i - 1]
        if denom == 0.0:
            raise ZeroDivisionError("zero pivot in tridiagonal solve")
        c[i] = upper[i] / denom if i < n - 1 else 0.0
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return out


def tridiag_matvec(const double[::1] lower, const double[::1] diag,
                   const double[::1] upper, const double[::1] v):
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    out = np.empty(n)
    cdef double[::1] y = out
    cdef double s
    for i in range(n):
        s = diag[i] * v[i]
        if i > 0:
            s += lower[i] * v[i - 1]
        if i < n - 1:
            s += upper[i] * v[i + 1]
        y[i] = s
    return out
