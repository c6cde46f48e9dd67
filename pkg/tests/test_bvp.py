import math

import numpy as np
import pytest

from blowup_lab.bvp import (ProblemSpec, apply_laplacian, bieberbach_exact, boundary_rate_fit, eigen_dirichlet,
                            graded_mesh, laplacian_coefficients, m_schedule, sandwich_check, solve_large,
                            solve_truncated, subsuper_residual, theta_pm)
from blowup_lab.errors import ExistenceGateError, ValidationError
from blowup_lab.funcatalog import catalog_f, catalog_weight
from blowup_lab.geometry import Annulus, Ball, Interval, Omega0

K0 = catalog_weight("power", {"theta": 0.0})


@pytest.fixture(scope="module")
def bieberbach():
    p = ProblemSpec(0.0, catalog_f("exp_rho", {"rho": 1.0}), K0, Interval(0.0, 1.0))
    return p, solve_large(p, M_max=30.0)


def test_graded_mesh_layout():
    m = graded_mesh(Interval(0.0, 1.0), 64)
    assert m.x[0] == 0.0 and m.x[-1] == 1.0 and m.x[64] == pytest.approx(0.5)
    h = np.diff(m.x[:65])
    assert np.all(np.diff(h) > 0)
    b = graded_mesh(Ball(3, 1.0), 64)
    assert b.boundary[-1] and not b.boundary[0]


@pytest.mark.parametrize("dom", [Interval(0.0, 1.0), Ball(3, 1.0), Annulus(2, 1.0, 2.0)])
def test_laplacian_exact_on_quadratics(dom):
    m = graded_mesh(dom, 128)
    coef = laplacian_coefficients(m)
    lap = apply_laplacian(coef, m.x ** 2)
    # skip the finest boundary-layer cells, where 1/h^2 amplifies round-off
    inner = ~m.boundary & (m.d > 1e-3)
    expected = 2.0 * m.N if m.radial else 2.0
    np.testing.assert_allclose(lap[inner], expected, rtol=1e-6)


def test_m_schedule_caps_at_overflow():
    s = m_schedule(4.0, 20, None, 100.0)
    assert s[:3] == [4.0, 8.0, 16.0] and s[-1] == pytest.approx(99.0)


@pytest.mark.parametrize("region, exact", [
    (Interval(0.0, 1.0), math.pi ** 2),
    (Interval(0.25, 0.75), 4 * math.pi ** 2),
    (Ball(3, 1.0), math.pi ** 2),
    (Ball(2, 1.0), 2.404825557695773 ** 2),
])
def test_eigenvalues(region, exact):
    assert eigen_dirichlet(region, 1024) == pytest.approx(exact, rel=1e-4)


def test_eigen_without_region_is_inf():
    assert eigen_dirichlet(None) == math.inf


def test_existence_gate():
    p = ProblemSpec(50.0, catalog_f("expm1"), K0, Interval(0.0, 1.0), Omega0(0.25, 0.75))
    with pytest.raises(ExistenceGateError) as exc:
        p.check_existence()
    assert exc.value.exit_code == 4 and "39.4" in str(exc.value)


def test_bieberbach_interior(bieberbach):
    p, res = bieberbach
    sol = res.solution
    inner = sol.d >= 0.1
    assert np.max(np.abs(sol.u[inner] - bieberbach_exact(sol.x[inner]))) < 1e-3
    assert sol.value_at(0.5) == pytest.approx(math.log(2 * math.pi ** 2), abs=1e-3)
    assert res.monotone


def test_continuation_is_monotone_in_M(bieberbach):
    _, res = bieberbach
    for a, b in zip(res.stages, res.stages[1:]):
        assert np.all(b.u >= a.u - 1e-12)


def test_truncated_solution_bounded_by_M(bieberbach):
    p, _ = bieberbach
    sol = solve_truncated(p, 8.0, mesh=graded_mesh(p.domain, 512))
    assert sol.u.max() == pytest.approx(8.0) and np.all(sol.u > 0)


def test_rate_fit_m1(bieberbach):
    _, res = bieberbach
    fit = boundary_rate_fit(res.solution, lambda d: 2 * math.log(1 / d), [1e-2, 1e-3, 1e-4])
    assert fit.verdict and abs(fit.ratio[-1] - 1) < 0.05


def test_rate_fit_needs_resolution(bieberbach):
    p, _ = bieberbach
    sol = solve_truncated(p, 30.0, mesh=graded_mesh(p.domain, 8, 1.0))
    with pytest.raises(ValidationError, match="insufficient resolution"):
        boundary_rate_fit(sol, lambda d: 1.0)


def test_theta_pm_and_bounds():
    tp, tm = theta_pm(1.0, 0.0, 0.25)
    assert tp == pytest.approx(1.0) and tm == pytest.approx(1 / 3)
    for bad in (0.0, 0.5):
        with pytest.raises(ValidationError):
            theta_pm(1.0, 0.0, bad)


def test_subsuper_certified_and_sandwich(bieberbach):
    p, res = bieberbach
    sup = subsuper_residual(p, 1e-3, 0.25, "+")
    sub = subsuper_residual(p, 1e-3, 0.25, "-")
    assert sup.certified and np.all(sup.residual <= 0)
    assert sub.certified and np.all(sub.residual >= 0)
    sw = sandwich_check(p, res.solution, 0.25, 1e-3, min(sup.delta, sub.delta))
    assert sw["verdict"]


def test_degenerate_gap_warning():
    p = ProblemSpec(0.0, catalog_f("exp_rho", {"rho": 1.0}), K0, Interval(0.0, 1.0))
    rep = subsuper_residual(p, 1e-3, 1e-4, "+")
    assert any("degenerate" in w for w in rep.warnings)


def test_positive_a_inside_omega0_runs():
    p = ProblemSpec(30.0, catalog_f("expm1"), K0, Interval(0.0, 1.0), Omega0(0.25, 0.75))
    res = solve_large(p, mesh=graded_mesh(p.domain, 1024))
    assert res.converged and res.monotone and res.solution.value_at(0.5) > 0
