import math

import numpy as np
import pytest
import sympy as sp

from blowup_lab.errors import ValidationError
from blowup_lab.functions import U, ScalarFunction
from blowup_lab.rvcalc import (RepresentationSpec, karamata_residual, keller_osserman, normalised_sv_check,
                               rapid_variation_check, representation_eval, rv_index_estimate)

GRID = 10.0 ** np.arange(2, 101)


def test_index_power_log_tends_to_rho():
    R = ScalarFunction(U ** 3 * sp.log(U), 1.0)
    est = rv_index_estimate(R, 2.0, GRID)
    assert abs(est.rho - 3.0) < 5e-3
    assert est.monotone


def test_index_oscillating_factor_shows_band():
    y = sp.log(U) ** sp.Rational(1, 3)
    est = rv_index_estimate(ScalarFunction(sp.exp(y * sp.cos(y)), 1.0), 2.0, GRID)
    assert est.band[1] - est.band[0] > 1e-4


def test_index_rejects_bad_xi():
    with pytest.raises(ValidationError):
        rv_index_estimate(ScalarFunction(U, 0.0), 1.0, GRID)


@pytest.mark.parametrize("expr", [sp.log(U), sp.log(sp.log(U)), (U - 1) / U])
def test_normalised_slowly_varying(expr):
    assert normalised_sv_check(ScalarFunction(expr, math.e), GRID).verdict


def test_power_is_not_slowly_varying():
    assert not normalised_sv_check(ScalarFunction(U ** 0.1, 0.0), GRID).verdict


def test_representation_roundtrip():
    L = ScalarFunction(sp.log(U), 1.0)
    spec = RepresentationSpec.from_normalised(L, math.e)
    for u in (10.0, 1e4, 1e10):
        assert representation_eval(spec, u) == pytest.approx(math.log(u), rel=1e-10)
    # phi = 1/log u decays slowly: still 0.054 at 1e8
    assert not spec.phi_vanishes(1e8) and spec.phi_vanishes(1e100)


def test_karamata_exact_for_pure_power():
    k = karamata_residual(ScalarFunction(U ** 2, 0.0), 2.0, -5.0, 1e3)
    assert abs(k.residual) < 1e-10


def test_karamata_residual_decreases_for_log_factor():
    R = ScalarFunction(U ** 2 * sp.log(U), 1.0)
    res = [abs(karamata_residual(R, 2.0, -4.0, 10.0 ** k).residual) for k in range(4, 9)]
    assert all(b < a for a, b in zip(res, res[1:]))


def test_karamata_requires_integrable_power():
    with pytest.raises(ValidationError):
        karamata_residual(ScalarFunction(U, 0.0), 1.0, -1.0, 10.0)


@pytest.mark.parametrize("F, verdict", [
    (U ** 2 / 2, "diverges"),
    (U ** 3 / 3, "converges"),
    (U ** 4 / 4, "converges"),
    (sp.exp(U) - 1 - U, "converges"),
])
def test_keller_osserman(F, verdict):
    assert keller_osserman(ScalarFunction(F, 0.0)).verdict == verdict


def test_keller_osserman_value_cubic():
    assert keller_osserman(ScalarFunction(U ** 4 / 4, 0.0)).value == pytest.approx(2.0, abs=1e-8)


def test_rapid_variation_of_exp():
    checks = rapid_variation_check(ScalarFunction(sp.exp(U), -math.inf), [0.5, 1.0, 2.0], 10.0 ** np.arange(1, 4))
    assert [c.expected for c in checks] == ["0", "1", "inf"]
    assert all(c.verdict for c in checks)


def test_index_matches_ratio_formula():
    # rho_hat(u) = 3 + log(1 + log 2 / log u) / log 2 for R = u^3 log u, xi = 2
    est = rv_index_estimate(ScalarFunction(U ** 3 * sp.log(U), 1.0), 2.0, 10.0 ** np.arange(2, 7))
    exact = 3 + math.log(1 + math.log(2) / math.log(1e6)) / math.log(2)
    assert est.rho == pytest.approx(exact, rel=1e-12)
    assert exact == pytest.approx(3.0706, abs=1e-4)
