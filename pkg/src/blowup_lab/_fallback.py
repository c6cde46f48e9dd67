"""Pure-Python versions of the tridiagonal kernels.

Same signatures and semantics as the compiled ``_kernels`` module; selected
automatically when the extension is not built.
"""
import numpy as np


def solve_tridiagonal(lower, diag, upper, rhs):
    """Thomas algorithm; ``lower[0]`` and ``upper[n-1]`` are ignored."""
    n = len(diag)
    if n == 0:
        return np.empty(0)
    lo = lower.tolist()
    di = diag.tolist()
    up = upper.tolist()
    r = rhs.tolist()
    c = [0.0] * n
    d = [0.0] * n
    denom = di[0]
    if denom == 0.0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    c[0] = up[0] / denom if n > 1 else 0.0
    d[0] = r[0] / denom
    for i in range(1, n):
        denom = di[i] - lo[i] * c[i - 1]
        if denom == 0.0:
            raise ZeroDivisionError("zero pivot in tridiagonal solve")
        c[i] = up[i] / denom if i < n - 1 else 0.0
        d[i] = (r[i] - lo[i] * d[i - 1]) / denom
    x = [0.0] * n
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return np.array(x)


def tridiag_matvec(lower, diag, upper, v):
    y = diag * v
    y[1:] += lower[1:] * v[:-1]
    y[:-1] += upper[:-1] * v[1:]
    return y
