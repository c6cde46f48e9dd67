"""Acceptance checks, parameterised by a JSON suite.

Each check kind takes a parameter dict and returns a :class:`CheckRecord`
(verdict plus the residual series it was decided on). Suites list records
``{"id", "name", "kind", "params"}``; :func:`run_suite` runs them in order and
records any crash as a failure.
"""
from __future__ import annotations

import contextlib
import io
import json
import math
import os
import tempfile
import time
import traceback
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .bvp import (ProblemSpec, bieberbach_exact, boundary_rate_fit, eigen_dirichlet, graded_mesh, solve_large,
                  subsuper_residual, uniqueness_probe)
from .funcatalog import catalog_f, catalog_weight
from .functions import U, ScalarFunction
from .geometry import Interval
from .profile import HProfile, get_profile, lemma_pro_verify, phi_derivatives, rate_predict, regular_constant
from .rvcalc import karamata_residual, keller_osserman


@dataclass
class CheckRecord:
    id: str
    name: str
    anchor: str
    verdict: str  # "pass" | "fail" | "inconclusive"
    residual_series: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    runtime: float = 0.0

    def as_dict(self):
        return {"id": self.id, "name": self.name, "anchor": self.anchor, "verdict": self.verdict,
                "residual_series": self.residual_series, "details": self.details, "runtime": self.runtime}


def _v(ok: bool) -> str:
    return "pass" if ok else "fail"


def _f(x):
    return [float(v) for v in np.ravel(x)]


# ---------------------------------------------------------------------------
# check kinds
# ---------------------------------------------------------------------------

def check_bieberbach(params):
    n = int(params.get("n", 4096))
    M = float(params.get("M", 30.0))
    d_min = float(params.get("d_min", 0.1))
    tol = float(params.get("tol", 1e-3))
    t_max = float(params.get("runtime_max", 10.0))
    t0 = time.perf_counter()
    p = ProblemSpec(0.0, catalog_f("exp_rho", {"rho": 1.0}), catalog_weight("power", {"theta": 0.0}),
                    Interval(0.0, 1.0))
    res = solve_large(p, tol_interior=1e-6, d_min=d_min, M_max=M, mesh=graded_mesh(p.domain, n))
    elapsed = time.perf_counter() - t0
    sol = res.solution
    inner = ~sol.mesh.boundary
    x, u, d = sol.x[inner], sol.u[inner], sol.d[inner]
    err = np.abs(u - bieberbach_exact(x))
    interior = float(err[d >= d_min].max())
    # closed form satisfies u'' = e^u (symbolic substitution)
    import sympy as sp

    X = sp.Symbol("x")
    expr = sp.log(2 * sp.pi ** 2 / sp.sin(sp.pi * X) ** 2)
    subst = sp.simplify(sp.diff(expr, X, 2) - sp.exp(expr))
    ok = interior <= tol and elapsed <= t_max and subst == 0 and res.monotone
    return ok, [interior], {"interior_max_error": interior, "error_d_ge_1e-3": float(err[d >= 1e-3].max()),
                            "u_center": sol.value_at(0.5), "exact_center": math.log(2 * math.pi ** 2),
                            "runtime_s": elapsed, "schedule": res.report["schedule"],
                            "substitution_residual": str(subst), "monotone": res.monotone}


def check_rate_m1(params):
    ds = params.get("d_samples", [1e-2, 1e-3, 1e-4])
    tol = float(params.get("tol", 0.05))
    M = float(params.get("M", 30.0))
    p = ProblemSpec(0.0, catalog_f("exp_rho", {"rho": 1.0}), catalog_weight("power", {"theta": 0.0}),
                    Interval(0.0, 1.0))
    sol = solve_large(p, tol_interior=1e-6, M_max=M).solution
    fit = boundary_rate_fit(sol, lambda d: 2.0 * math.log(1.0 / d), d_samples=ds, final_threshold=tol)
    dev = np.abs(fit.ratio - 1.0)
    exact = bieberbach_exact(fit.d) / (2.0 * np.log(1.0 / fit.d))
    ok = bool(len(fit.d) == len(ds) and np.all(np.diff(dev) < 0) and dev[-1] <= tol)
    return ok, _f(fit.ratio - 1.0), {"d": _f(fit.d), "ratio": _f(fit.ratio), "exact_ratio": _f(exact)}


def check_phi_closed_form(params):
    cases = params.get("cases", [[1, 0], [1, 1], [2, 0]])
    t = np.geomspace(float(params.get("t_lo", 1e-6)), float(params.get("t_hi", 1e-1)), int(params.get("n", 11)))
    rtol = float(params.get("rtol", 1e-6))
    itol = float(params.get("identity_tol", 1e-8))
    worst, worst_id, series = 0.0, 0.0, []
    for rho, theta in cases:
        f = catalog_f("exp_rho", {"rho": rho})
        K = catalog_weight("power", {"theta": theta})
        prof = get_profile(f, K)
        for tv in t:
            x, _, _ = prof.phi(float(tv))
            exact = (2.0 * (theta + 1.0) / (rho * tv ** (theta + 1.0))) ** (2.0 / rho)
            d1, d2 = phi_derivatives(float(tv), x, f, K)
            e1 = abs(x / exact - 1.0)
            e2 = abs(x * d2 / d1 ** 2 - (1.0 + rho / (2.0 * (theta + 1.0))))
            worst, worst_id = max(worst, e1), max(worst_id, e2)
        series.append(worst)
    return worst <= rtol and worst_id <= itol, series, {"max_rel_error": worst, "max_identity_error": worst_id}


def check_h_closed_form(params):
    rtol = float(params.get("rtol", 1e-8))
    ftol = float(params.get("ode_tol", 1e-6))
    c0 = float(params.get("h_constant_theta0", math.sqrt(2.0)))
    c1 = float(params.get("h_constant_theta1", 2.0 * math.sqrt(2.0)))
    t = np.geomspace(1e-4, 1e-1, 7)
    f = catalog_f("power", {"p": 3.0})
    errs = []
    for theta, c, k in ((0.0, c0, 1.0), (1.0, c1, 2.0)):
        hp = HProfile(f, catalog_weight("power", {"theta": theta}))
        errs.append(max(abs(hp.h(float(tv))[0] / (c / tv ** k) - 1.0) for tv in t))
    const = regular_constant(2.0, 0.0)
    # h'' = f(h) for unit weight: fourth-order central differences
    hp = HProfile(f, catalog_weight("power", {"theta": 0.0}))
    ode = 0.0
    for tv in (0.05, 0.02, 0.01):
        s = 0.01 * tv
        v = [hp.h(tv + k * s)[0] for k in (-2, -1, 0, 1, 2)]
        h2 = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * s * s)
        ode = max(ode, abs(h2 / float(f.f(v[2])) - 1.0))
    ok = errs[0] <= rtol and errs[1] <= rtol and const == 1.0 and ode <= ftol
    return ok, errs + [ode], {"theta0_error": errs[0], "theta1_error": errs[1], "regular_constant": const,
                              "ode_error": ode}


def check_lemma_pro(params):
    names = params.get("f", ["expm1", "sinh", "exp2_m_e"])
    thetas = params.get("theta", [0, 1])
    t = 10.0 ** -np.arange(int(params.get("k_lo", 2)), int(params.get("k_hi", 8)) + 1, dtype=float)
    thr = float(params.get("final_threshold", 1e-2))
    runs = {}
    ok = True
    series = []
    for name in names:
        for theta in thetas:
            checks = lemma_pro_verify(catalog_f(name), catalog_weight("power", {"theta": theta}), t, thr)
            key = f"{name}/theta={theta}"
            runs[key] = {c.key: {"limit": c.limit, "final_residual": float(c.residuals[-1]),
                                 "verdict": _v(c.verdict), "residuals": _f(c.residuals)} for c in checks}
            ok = ok and all(c.verdict for c in checks)
            series.append(max(abs(float(c.residuals[-1])) for c in checks))
    return ok, series, {"runs": runs}


def check_corollary_m2(params):
    runs = params.get("runs", [[0, 0], [1, 0], [0, 1]])
    thr = float(params.get("final_threshold", 0.1))
    out = {}
    ok = True
    series = []
    f = catalog_f("exp2_m_e")
    for theta, a in runs:
        K = catalog_weight("power", {"theta": theta})
        p = ProblemSpec(float(a), f, K, Interval(0.0, 1.0))
        sol = solve_large(p, tol_interior=1e-6).solution
        fit = boundary_rate_fit(sol, lambda d: math.log(math.log(1.0 / d)), final_threshold=thr)
        prof_fit = boundary_rate_fit(sol, rate_predict("nonregular", f, K), final_threshold=thr)
        out[f"theta={theta},a={a}"] = {"d": _f(fit.d), "ratio": _f(fit.ratio), "verdict": _v(fit.verdict),
                                       "ratio_vs_profile": _f(prof_fit.ratio)}
        ok = ok and fit.verdict
        series.append(float(abs(fit.ratio[-1] - 1.0)))
    return ok, series, out


def check_karamata(params):
    u = float(params.get("u", 1e8))
    tol = float(params.get("tol", 1e-3))
    R = ScalarFunction(U ** 2 * __import__("sympy").log(U), 1.0, "u^2 log u")
    res = karamata_residual(R, 2.0, -4.0, u)
    grid = [karamata_residual(R, 2.0, -4.0, 10.0 ** k).residual for k in range(4, 9)]
    exact = math.log(u) / (math.log(u) + 1.0)
    return abs(res.residual) <= tol, grid, {"ratio": res.ratio, "limit": res.limit, "residual": res.residual,
                                            "closed_form_ratio": exact}


def _ko_target(name, p=None):
    if name == "power":
        q = float(p)
        return ScalarFunction(U ** (q + 1) / (q + 1), 0.0, f"F[u^{q:g}]")
    return catalog_f(name)


def check_keller_osserman(params):
    expected = params.get("expected", {"power:1": "diverges", "power:2": "converges", "power:3": "converges",
                                       "expm1": "converges", "exp2_m_e": "converges", "sinh": "converges"})
    value = float(params.get("u3_value", 2.0))
    tol = float(params.get("tol", 1e-8))
    got = {}
    ok = True
    for key, want in expected.items():
        name, _, arg = key.partition(":")
        r = keller_osserman(_ko_target(name, arg or None))
        got[key] = {"verdict": r.verdict, "value": r.value}
        ok = ok and r.verdict == want
    v3 = got.get("power:3", {}).get("value", math.nan)
    ok = ok and abs(v3 - value) <= tol
    return ok, [abs(v3 - value)], got


def check_existence_gate(params):
    from .cli import main as cli_main

    lam = eigen_dirichlet(Interval(0.0, 1.0), int(params.get("n", 1024)))
    rel = abs(lam / math.pi ** 2 - 1.0)
    base = {
        "problem": {"a": 50.0, "f": {"name": "expm1"}, "weight": {"name": "power", "theta": 0.0},
                    "domain": {"kind": "interval", "bounds": [0.0, 1.0]}, "omega0": {"lo": 0.25, "hi": 0.75}},
        "solver": {"mesh": {"n": 1024}},
        "verify": {"rate_fit": {"enabled": False}},
    }
    codes, messages = {}, {}
    with tempfile.TemporaryDirectory() as tmp:
        for a in (float(params.get("a_refused", 50.0)), float(params.get("a_runs", 30.0))):
            cfg = json.loads(json.dumps(base))
            cfg["problem"]["a"] = a
            cfg["output"] = {"dir": os.path.join(tmp, f"a{a:g}")}
            path = os.path.join(tmp, f"a{a:g}.json")
            with open(path, "w") as fh:
                json.dump(cfg, fh)
            err = io.StringIO()
            with contextlib.redirect_stderr(err):
                codes[a] = cli_main(["solve", path, "--quiet"])
            messages[a] = err.getvalue().strip()
    a_ref, a_run = codes
    ok = rel <= 1e-3 and codes[a_ref] == 4 and codes[a_run] == 0
    return ok, [rel], {"lambda_1": lam, "pi_squared": math.pi ** 2, "exit_codes": {str(k): v for k, v in codes.items()},
                       "messages": {str(k): v for k, v in messages.items()}}


def check_subsuper(params):
    eps0 = float(params.get("epsilon0", 0.25))
    sigmas = params.get("sigma_list", [1e-3])
    p = ProblemSpec(0.0, catalog_f("exp_rho", {"rho": 1.0}), catalog_weight("power", {"theta": 0.0}),
                    Interval(0.0, 1.0))
    out = {}
    ok = True
    series = []
    for s in sigmas:
        sup = subsuper_residual(p, float(s), eps0, "+")
        sub = subsuper_residual(p, float(s), eps0, "-")
        out[f"sigma={s:g}"] = {"super": {"certified": sup.certified, "delta": sup.delta, "vartheta": sup.vartheta,
                                         "max_residual": float(sup.residual.max()) if sup.certified else None},
                               "sub": {"certified": sub.certified, "delta": sub.delta, "vartheta": sub.vartheta,
                                       "min_residual": float(sub.residual.min()) if sub.certified else None}}
        ok = ok and sup.certified and sub.certified
        series += [float(sup.residual.max()) if sup.certified else math.inf,
                   -float(sub.residual.min()) if sub.certified else math.inf]
    return ok, series, out


def _fixture(name):
    K0 = catalog_weight("power", {"theta": 0.0})
    if name == "bieberbach":
        return ProblemSpec(0.0, catalog_f("exp_rho", {"rho": 1.0}), K0, Interval(0.0, 1.0)), {}
    if name == "power3":
        return ProblemSpec(0.0, catalog_f("power", {"p": 3.0}), K0, Interval(0.0, 1.0)), {"tol_interior": 1e-4}
    if name == "expm1_theta1":
        return ProblemSpec(1.0, catalog_f("expm1"), catalog_weight("power", {"theta": 1.0}), Interval(0.0, 1.0)), {}
    raise ValueError(f"unknown fixture {name!r}")


def check_uniqueness(params):
    fixtures = params.get("fixtures", ["bieberbach", "power3", "expm1_theta1"])
    tol = float(params.get("tol", 1e-6))
    out = {}
    ok = True
    series = []
    for name in fixtures:
        p, kw = _fixture(name)
        run = solve_large(p, **kw)
        probe = uniqueness_probe(p, **kw)
        out[name] = {"discrepancy": probe.discrepancy, "monotone": run.monotone,
                     "monotonicity_violation": run.monotonicity_violation, "converged": run.converged}
        ok = ok and run.monotone and probe.discrepancy <= tol
        series.append(probe.discrepancy)
    return ok, series, out


def check_a_independence(params):
    a_list = params.get("a", [-1.0, 0.0, 1.0])
    theta = float(params.get("theta", 1.0))
    thr = float(params.get("final_threshold", 0.05))
    f = catalog_f("expm1")
    K = catalog_weight("power", {"theta": theta})
    pred = rate_predict("nonregular", f, K)
    out = {}
    ok = True
    series = []
    for a in a_list:
        sol = solve_large(ProblemSpec(float(a), f, K, Interval(0.0, 1.0))).solution
        fit = boundary_rate_fit(sol, pred, final_threshold=thr)
        out[f"a={a:g}"] = {"d": _f(fit.d), "ratio": _f(fit.ratio), "verdict": _v(fit.verdict)}
        ok = ok and fit.verdict
        series.append(float(abs(fit.ratio[-1] - 1.0)))
    return ok, series, out


CHECKS = {
    "bieberbach_exactness": check_bieberbach,
    "rate_m1": check_rate_m1,
    "phi_closed_form": check_phi_closed_form,
    "h_closed_form": check_h_closed_form,
    "lemma_pro": check_lemma_pro,
    "corollary_m2": check_corollary_m2,
    "karamata": check_karamata,
    "keller_osserman": check_keller_osserman,
    "existence_gate": check_existence_gate,
    "subsuper": check_subsuper,
    "uniqueness": check_uniqueness,
    "a_independence": check_a_independence,
}


def run_check(entry: dict) -> CheckRecord:
    kind = entry.get("kind")
    rec = CheckRecord(str(entry.get("id", kind)), entry.get("name", kind), entry.get("anchor", ""), "fail")
    t0 = time.perf_counter()
    try:
        fn = CHECKS[kind]
        ok, series, details = fn(entry.get("params", {}))
        rec.verdict = _v(ok)
        rec.residual_series = [float(v) for v in series]
        rec.details = details
    except Exception as exc:  # recorded, suite continues
        rec.verdict = "fail"
        rec.details = {"error": f"{type(exc).__name__}: {exc}", "traceback": traceback.format_exc(limit=3)}
    rec.runtime = time.perf_counter() - t0
    return rec


def default_suite() -> dict:
    text = resources.files("blowup_lab").joinpath("data/default_suite.json").read_text()
    return json.loads(text)


def run_suite(suite: dict) -> dict:
    records = [run_check(e) for e in suite.get("criteria", [])]
    counts = {k: sum(r.verdict == k for r in records) for k in ("pass", "fail", "inconclusive")}
    return {"records": [r.as_dict() for r in records], "summary": counts}
