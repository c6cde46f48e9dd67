import math

import numpy as np
import pytest
import sympy as sp

from blowup_lab.errors import DomainError, NumericalError
from blowup_lab.functions import U, ScalarFunction, exp_m, iterated_log, log_m, self_test_derivative
from blowup_lab.quadrature import gk15, improper_integral, quad
from blowup_lab.rootfind import expand_bracket, safeguarded_newton


def test_gk15_exact_for_polynomials():
    k, err, _ = gk15(lambda x: x ** 20, np.array([0.0]), np.array([1.0]))
    assert k[0] == pytest.approx(1.0 / 21.0, rel=1e-14)


def test_quad_and_reversed_limits():
    assert quad(np.exp, 0.0, 1.0) == pytest.approx(math.e - 1.0, rel=1e-13)
    assert quad(np.exp, 1.0, 0.0) == pytest.approx(1.0 - math.e, rel=1e-13)


@pytest.mark.parametrize("fn, exact", [
    (lambda x: x ** -2.0, 1.0),
    (lambda x: np.exp(-x), math.exp(-1.0)),
    (lambda x: x ** -1.5, 2.0),
])
def test_improper_integrals(fn, exact):
    assert improper_integral(fn, 1.0, rtol=1e-12).value == pytest.approx(exact, rel=1e-9)


def test_bracket_and_newton_cube_root():
    g = lambda z: z ** 3 - 2.0
    a, b, ga, gb = expand_bracket(g, 10.0)
    x, _ = safeguarded_newton(g, lambda z: 3 * z * z, a, b, ga, gb)
    assert x == pytest.approx(2.0 ** (1 / 3), rel=1e-14)


def test_newton_rejects_non_bracket():
    with pytest.raises(NumericalError):
        safeguarded_newton(lambda z: z * z + 1, lambda z: 2 * z, -1.0, 1.0)


def test_bracket_failure_carries_history():
    with pytest.raises(NumericalError) as exc:
        expand_bracket(lambda z: 1.0, 0.0, max_expansions=5)
    assert exc.value.history


def test_scalar_function_derivatives_and_domain():
    f = ScalarFunction(sp.exp(U) * sp.log(U), 0.0)
    assert self_test_derivative(f, [0.5, 2.0, 10.0]) < 1e-7
    with pytest.raises(DomainError):
        f(-1.0)


def test_iterated_logs_invert():
    x = np.array([20.0, 1e3, 1e8])
    np.testing.assert_allclose(np.exp(np.exp(iterated_log(x, 2))), x, rtol=1e-12)
    assert float(log_m(exp_m(sp.Integer(1), 2), 2)) == 1.0
    with pytest.raises(DomainError):
        iterated_log(0.5, 2)
