import csv
import math

import numpy as np
import pytest

from blowup_lab.errors import OutOfRangeError, ValidationError
from blowup_lab.funcatalog import catalog_f, catalog_weight
from blowup_lab.profile import (HProfile, corollary_constant, get_profile, h_solve, lemma_pro_verify, phi_derivatives,
                                phi_solve, profile_table, rate_predict, regular_constant, zeta)

K0 = catalog_weight("power", {"theta": 0.0})
K1 = catalog_weight("power", {"theta": 1.0})
T = 10.0 ** -np.arange(2, 9, dtype=float)


def phi_exact(t, rho, theta):
    return (2 * (theta + 1) / (rho * t ** (theta + 1))) ** (2 / rho)


def test_zeta_closed_form():
    # f = e^u: zeta(x) = 2 x^(-1/2)
    f = catalog_f("exp_rho", {"rho": 1.0})
    for x in (3.0, 400.0, 1e8):
        assert zeta(x, f) == pytest.approx(2 / math.sqrt(x), rel=1e-10)


@pytest.mark.parametrize("rho, theta", [(1, 0), (1, 1), (2, 0), (0.5, 2)])
def test_phi_closed_form(rho, theta):
    f = catalog_f("exp_rho", {"rho": rho})
    K = catalog_weight("power", {"theta": theta})
    for t in (1e-1, 1e-3, 1e-6):
        if t >= get_profile(f, K).beta:
            continue
        assert phi_solve(t, f, K) == pytest.approx(phi_exact(t, rho, theta), rel=1e-10)


def test_phi_derivatives_match_finite_differences():
    f, t = catalog_f("expm1"), 1e-3
    x = phi_solve(t, f, K1)
    d1, d2 = phi_derivatives(t, x, f, K1)
    s = 1e-4 * t
    xp, xm = phi_solve(t + s, f, K1), phi_solve(t - s, f, K1)
    assert (xp - xm) / (2 * s) == pytest.approx(d1, rel=1e-6)
    assert (xp - 2 * x + xm) / s ** 2 == pytest.approx(d2, rel=1e-4)


def test_phi_out_of_range_names_beta():
    f = catalog_f("exp_rho", {"rho": 1.0})
    beta = get_profile(f, K0).beta
    with pytest.raises(OutOfRangeError) as exc:
        phi_solve(2 * beta, f, K0)
    assert exc.value.beta == pytest.approx(beta)


def test_regular_branch_refused():
    with pytest.raises(ValidationError, match="profile --h"):
        phi_solve(0.1, catalog_f("power", {"p": 3.0}), K0)


@pytest.mark.parametrize("theta, c, k", [(0.0, math.sqrt(2), 1), (1.0, 2 * math.sqrt(2), 2)])
def test_h_closed_form(theta, c, k):
    K = catalog_weight("power", {"theta": theta})
    for t in (1e-1, 1e-4):
        assert h_solve(t, catalog_f("power", {"p": 3.0}), K) == pytest.approx(c / t ** k, rel=1e-10)


def test_h_derivatives():
    hp = HProfile(catalog_f("power", {"p": 3.0}), K0)
    h, _, _ = hp.h(0.1)
    d1, d2 = hp.derivatives(0.1, h)
    assert d1 == pytest.approx(-math.sqrt(2) / 0.01, rel=1e-10)
    assert d2 == pytest.approx(h ** 3, rel=1e-10)


def test_h_refuses_divergent_ko():
    from blowup_lab.funcatalog import _spec
    from blowup_lab.functions import U

    with pytest.raises(ValidationError):
        HProfile(_spec("lin", {}, U, U ** 2 / 2, 0.0), K0)


def test_constants():
    assert regular_constant(2.0, 0.0) == 1.0
    assert regular_constant(1.0, 1.0) == pytest.approx((5 / 6) ** 1)
    assert corollary_constant(1.0, 0.0, 1) == pytest.approx(2.0)
    assert corollary_constant(1.0, 1.0, 2) == 1.0


def test_rate_predict_branch_mismatch():
    with pytest.raises(ValidationError):
        rate_predict("regular", catalog_f("expm1"), K0)
    pred = rate_predict("nonregular", catalog_f("expm1"), K0)
    assert pred.corollary_constant == pytest.approx(2.0)
    assert pred(1e-3) == pytest.approx(math.log(phi_solve(1e-3, catalog_f("expm1"), K0)))


def test_profile_table_csv(tmp_path):
    tab = profile_table(catalog_f("expm1"), K0, T, workers=2)
    assert np.all(tab.residual <= 1e-9)
    path = tmp_path / "phi.csv"
    tab.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == list(tab.COLUMNS)
    assert all(len(c.split("e")[0].replace("-", "").replace(".", "")) == 17 for c in rows[1])


def test_profile_table_threads_match_serial():
    f = catalog_f("sinh")
    a = profile_table(f, K1, T, workers=1)
    b = profile_table(f, K1, T, workers=4)
    np.testing.assert_array_equal(a.phi, b.phi)


def test_limits_b_to_e_for_expm1():
    checks = {c.key: c for c in lemma_pro_verify(catalog_f("expm1"), K0, T)}
    assert set(checks) == set("abcdef")
    for k in "bcde":
        assert checks[k].verdict, k
    # (a) and (f) converge only logarithmically
    assert abs(checks["a"].residuals[-1]) < abs(checks["a"].residuals[0])
