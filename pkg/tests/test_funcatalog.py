import math

import numpy as np
import pytest
import sympy as sp

from blowup_lab.errors import ValidationError
from blowup_lab.funcatalog import (CATALOG_F, CATALOG_WEIGHTS, PROFILES, a1_certificate, catalog_f, catalog_weight,
                                   compose_f, log_profile, smoothstep, weight_to_b)
from blowup_lab.functions import U, ScalarFunction
from blowup_lab.geometry import Interval, Omega0
from blowup_lab.rvcalc import RVClass, keller_osserman, normalised_sv_check

BIG = 10.0 ** np.arange(2, 101)


@pytest.mark.parametrize("name", CATALOG_F)
def test_catalog_entries_build(name):
    f = catalog_f(name)
    assert f.rho > 0
    assert float(f.F(0.0)) == pytest.approx(0.0, abs=1e-12)
    assert f.branch == ("regular" if name == "power" else "nonregular")


@pytest.mark.parametrize("name", [n for n in CATALOG_F if n not in ("exp_rho", "exp2_cos")])
def test_a1_certificates(name):
    assert catalog_f(name).a1.ok


def test_exp2_cos_fails_a1():
    # f' = (1 - sin y) y' vanishes periodically, so f(u)/u dips past u ~ 1.2455
    cert = catalog_f("exp2_cos").a1
    assert not cert.ok
    assert cert.first_failure == pytest.approx(1.2455, abs=1e-3)


def test_fixture_is_flagged():
    f = catalog_f("exp_rho")
    assert f.fixture and not a1_certificate(f.f).ok


@pytest.mark.parametrize("name", ["expm1", "sinh", "coshm1", "exp2_m_e", "power"])
def test_keller_osserman_catalog(name):
    assert keller_osserman(catalog_f(name)).verdict == "converges"


@pytest.mark.parametrize("name", ["expm1", "sinh", "coshm1", "exp_log", "exp2_m_e"])
def test_Lf_slowly_varying(name):
    f = catalog_f(name)
    assert normalised_sv_check(f.Lf, BIG[BIG > f.lf_lower]).verdict


@pytest.mark.parametrize("key", sorted(PROFILES))
def test_profile_inverse_roundtrip(key):
    prof = PROFILES[key](0.5) if key == "exp_log_gamma" else PROFILES[key]()
    for y in (2.0, 5.0, 20.0):
        if y <= prof.C:
            continue
        x = prof.inverse(y)
        assert float(prof.L(x)) == pytest.approx(y, rel=1e-12)


def test_reconstruct_matches_log():
    prof = log_profile()
    assert prof.reconstruct(1e6) == pytest.approx(math.log(1e6), rel=1e-12)


def test_compose_power_splice():
    g = RVClass(2.0, ScalarFunction(sp.log(U), 1.0))
    spec = compose_f(g, log_profile(), g_fn=ScalarFunction(U ** 2 * sp.log(U), 1.0))
    assert spec.a1.ok
    u = np.linspace(0.01, 5, 200)
    assert np.all(np.diff(np.asarray(spec.f(u), float)) > 0)


def test_compose_hermite_splice_rejected_with_interval():
    g = RVClass(2.0, ScalarFunction(sp.log(U), 1.0))
    with pytest.raises(ValidationError, match=r"\[.*\]"):
        compose_f(g, log_profile(), splice="hermite", g_fn=ScalarFunction(U ** 2 * sp.log(U), 1.0))


@pytest.mark.parametrize("bad", [("power", {"p": 1.0}), ("power_exp", {"beta": 0.5}), ("exp_rho", {"rho": -1})])
def test_invalid_parameters(bad):
    with pytest.raises(ValidationError):
        catalog_f(*bad)


def test_unknown_names():
    with pytest.raises(ValidationError):
        catalog_f("nope")
    with pytest.raises(ValidationError):
        catalog_weight("nope")
    with pytest.raises(ValidationError):
        catalog_weight("power", {"theta": -1})


@pytest.mark.parametrize("name, index", [("power", 1.0), ("sin_power", 1.0), ("power_log", 2.0),
                                         ("power_itlog", 1.0)])
def test_weight_index(name, index):
    K = catalog_weight(name, {"theta": 1.0})
    t = 1e-8
    assert t * float(K.Kp(t)) / float(K(t)) == pytest.approx(index, abs=0.1)
    assert K.theta == pytest.approx(index)


def test_expgamma_index_exact():
    # t K'/K = theta + gamma (log 1/t)^(gamma - 1)
    K = catalog_weight("power_expgamma", {"theta": 1.0, "gamma": 0.5})
    for t in (1e-4, 1e-8, 1e-50):
        lt = math.log(1 / t)
        assert t * float(K.Kp(t)) / float(K(t)) == pytest.approx(1.0 + 0.5 * lt ** -0.5, rel=1e-10)


def test_IK_quadrature_matches_closed_form():
    K = catalog_weight("sin_power", {"theta": 1.0})
    assert K.IK(0.5) == pytest.approx(1.0 - math.cos(0.5), rel=1e-12)
    Kp = catalog_weight("power", {"theta": 2.0})
    assert Kp.IK(0.3) == pytest.approx(0.3 ** 3 / 3, rel=1e-14)


def test_weight_to_b_with_omega0():
    K = catalog_weight("power", {"theta": 0.0})
    b = weight_to_b(K, Interval(0.0, 1.0), Omega0(0.25, 0.75))
    x = np.array([0.0, 0.1, 0.5, 0.74])
    v = np.asarray(b(x), float)
    assert v[2] == 0.0 and v[3] == 0.0 and v[0] == 1.0
    assert smoothstep(np.array([0.0, 1.0, 2.0])).tolist() == [0.0, 1.0, 1.0]


@pytest.mark.parametrize("name", ["expm1", "sinh", "coshm1", "exp_log", "exp2_m_e", "exp_rho"])
def test_index_of_f_of_profile(name):
    from blowup_lab.rvcalc import rv_index_estimate

    f = catalog_f(name)
    est = rv_index_estimate(f.f_of_profile(), 2.0, 10.0 ** np.arange(2, 7))
    assert abs(est.rho - f.rho) < 5e-2


def test_index_of_power_exp_converges_logarithmically():
    from blowup_lab.rvcalc import rv_index_estimate

    f = catalog_f("power_exp")
    est = rv_index_estimate(f.f_of_profile(), 2.0, 10.0 ** np.arange(2, 101))
    # f(L(u)) = u log u: residual log(1 + log 2/log u)/log 2, 0.0706 at 1e6
    i6 = np.searchsorted(est.u, 1e6)
    assert est.rho_hat[i6] - 1 == pytest.approx(math.log(1 + math.log(2) / math.log(1e6)) / math.log(2), rel=1e-9)
    assert np.all(np.diff(est.rho_hat) < 0) and est.rho - 1 < 5e-3
