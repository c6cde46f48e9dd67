"""Kernel selection: compiled extension if importable, else pure Python.

Set ``BLOWUP_LAB_PURE=1`` to force the fallback (used by the benchmark and
by the kernel-agreement tests).
"""
import os

import numpy as np

from . import _fallback

BACKEND = "python"
_impl = _fallback
if os.environ.get("BLOWUP_LAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def solve_tridiagonal(lower, diag, upper, rhs):
    """Solve ``T x = rhs`` for tridiagonal ``T`` given by its three bands."""
    return _impl.solve_tridiagonal(_f64(lower), _f64(diag), _f64(upper), _f64(rhs))


def tridiag_matvec(lower, diag, upper, v):
    return _impl.tridiag_matvec(_f64(lower), _f64(diag), _f64(upper), _f64(v))
