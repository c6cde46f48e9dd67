import os
import subprocess
import sys

import numpy as np
import pytest

from blowup_lab import _fallback, kernels


def random_system(n, seed=1):
    rng = np.random.default_rng(seed)
    lo, up = rng.uniform(-1, 0, n), rng.uniform(-1, 0, n)
    di = 2.5 + rng.uniform(0, 1, n)
    return lo, di, up, rng.standard_normal(n)


@pytest.mark.parametrize("n", [1, 2, 5, 1000])
def test_thomas_matches_dense(n):
    lo, di, up, rhs = random_system(n)
    A = np.diag(di) + np.diag(lo[1:], -1) + np.diag(up[:-1], 1)
    x = kernels.solve_tridiagonal(lo, di, up, rhs)
    np.testing.assert_allclose(A @ x, rhs, atol=1e-12)
    np.testing.assert_allclose(kernels.tridiag_matvec(lo, di, up, x), rhs, atol=1e-12)


def test_backends_agree():
    try:
        from blowup_lab import _kernels
    except ImportError:
        pytest.skip("compiled extension not built")
    lo, di, up, rhs = random_system(4097)
    np.testing.assert_array_equal(_kernels.solve_tridiagonal(lo, di, up, rhs), _fallback.solve_tridiagonal(lo, di, up, rhs))
    np.testing.assert_array_equal(_kernels.tridiag_matvec(lo, di, up, rhs), _fallback.tridiag_matvec(lo, di, up, rhs))


def test_pure_env_selects_fallback():
    env = dict(os.environ, BLOWUP_LAB_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from blowup_lab import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_zero_pivot_raises():
    with pytest.raises(ZeroDivisionError):
        kernels.solve_tridiagonal(np.zeros(2), np.zeros(2), np.zeros(2), np.ones(2))
