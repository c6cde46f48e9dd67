"""Catalogued nonlinearities ``f``, slow-variation profiles and boundary weights.

A nonlinearity on the non-regular branch comes with a decomposition
``f = g o Linv`` where ``L`` (the *profile*) is slowly varying with
``L' in NRV_{-1}`` and ``g`` is regularly varying of index ``rho > 0``;
``Lf(u) = f(L(u)) / u**rho`` is the normalised slowly varying factor used
by the blow-up profile.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special
import sympy as sp

from .errors import DomainError, ValidationError
from .functions import U, ScalarFunction, exp_m, log_m
from .geometry import Omega0
from .quadrature import improper_integral, integrate_panels, quad
from .rootfind import expand_bracket, safeguarded_newton
from .rvcalc import RVClass

E = sp.E


# ---------------------------------------------------------------------------
# slow-variation profiles
# ---------------------------------------------------------------------------

@dataclass
class SlowVariationProfile:
    """A slowly varying ``L`` with ``L -> inf`` and ``L' in NRV_{-1}``."""

    L: ScalarFunction
    B: float
    name: str = "L"
    inverse_expr: object = None  # sympy expression for L^{-1}, when known
    m: int = 1
    alpha: float = 1.0

    def __post_init__(self):
        self.Lp = self.L.deriv(1)
        self.Lpp = self.L.deriv(2)
        if self.L.analytic:
            self.ell = ScalarFunction(sp.simplify(U * sp.diff(self.L.expr, U) / self.L.expr), self.B)
        else:
            L, Lp = self.L, self.Lp
            self.ell = ScalarFunction(lambda u: u * Lp(u) / L(u), self.B)
        self.C = float(self.L(self.B))
        if not self.C > 0:
            raise ValidationError(f"profile {self.name} must be positive at B = {self.B:g}")
        self._inv = (
            sp.lambdify(U, self.inverse_expr, modules="numpy") if self.inverse_expr is not None else None
        )

    def __call__(self, u):
        return self.L(u)

    def inverse(self, y, tol: float = 1e-12):
        """``L^{-1}(y)`` by bracketing + safeguarded Newton in ``log u``."""
        y_arr = np.asarray(y, dtype=float)
        if y_arr.ndim:
            return np.array([self.inverse(v, tol) for v in y_arr])
        y = float(y_arr)
        if y < self.C:
            raise DomainError(f"{self.name}^-1: value {y:g} below L(B) = {self.C:g}")
        L, Lp = self.L, self.Lp

        def g(z):
            return float(L(math.exp(z))) - y

        def dg(z):
            u = math.exp(z)
            return u * float(Lp(u))

        z0 = math.log(self.B)
        if self._inv is not None:
            with np.errstate(all="ignore"):
                guess = float(self._inv(y))
            if math.isfinite(guess) and guess > self.B:
                z0 = math.log(guess)
        a, b, ga, gb = expand_bracket(g, z0, step=0.5, lo_limit=math.log(self.B))
        z, _ = safeguarded_newton(g, dg, a, b, ga, gb, x0=z0, xtol=tol)
        return math.exp(z)

    def reconstruct(self, u, rtol: float = 1e-12) -> float:
        """``C exp(int_B^u ell(t)/t dt)`` with ``C = L(B)``."""
        if u < self.B:
            raise DomainError("reconstruction needs u >= B")
        s0, s1 = math.log(self.B), math.log(u)
        if s1 == s0:
            return self.C
        ell = self.ell
        n = max(1, int(math.ceil(s1 - s0)))
        v = quad(lambda s: np.asarray(ell(np.exp(s)), float) * np.ones_like(s), s0, s1, rtol=rtol, n_panels=n)
        return self.C * math.exp(v)


def log_profile() -> SlowVariationProfile:
    return SlowVariationProfile(ScalarFunction(sp.log(U), 0.0, "log"), math.e, "log", sp.exp(U), 1, 1.0)


def iterated_log_profile(m: int = 1, alpha: float = 1.0) -> SlowVariationProfile:
    """``(log_m u)**alpha`` with ``B = exp_m(1)``."""
    if m < 1 or not alpha > 0:
        raise ValidationError("need m >= 1 and alpha > 0")
    a = sp.nsimplify(alpha)
    B = float(exp_m(sp.Integer(1), m).evalf(30))
    expr = log_m(U, m) ** a
    inv = exp_m(U ** (1 / a), m)
    lo = float(exp_m(sp.Integer(0), m - 1).evalf(30)) if m > 1 else 0.0
    return SlowVariationProfile(ScalarFunction(expr, lo, f"log_{m}^{alpha}"), B, f"(log_{m} u)^{alpha}", inv, m, alpha)


def exp_log_gamma_profile(gamma: float) -> SlowVariationProfile:
    """``exp((log u)**gamma)``, ``gamma in (0, 1)``."""
    if not 0 < gamma < 1:
        raise ValidationError("gamma must lie in (0, 1)")
    g = sp.nsimplify(gamma)
    expr = sp.exp(sp.log(U) ** g)
    inv = sp.exp(sp.log(U) ** (1 / g))
    return SlowVariationProfile(ScalarFunction(expr, 1.0), math.e, f"exp((log u)^{gamma})", inv)


def exp_log_over_loglog_profile() -> SlowVariationProfile:
    expr = sp.exp(sp.log(U) / sp.log(sp.log(U)))
    return SlowVariationProfile(ScalarFunction(expr, math.e), math.exp(math.e), "exp(log u / log log u)")


PROFILES = {
    "log": lambda: log_profile(),
    "itlog": lambda m=1, alpha=1.0: iterated_log_profile(int(m), float(alpha)),
    "exp_log_gamma": lambda gamma: exp_log_gamma_profile(float(gamma)),
    "exp_log_over_loglog": lambda: exp_log_over_loglog_profile(),
}


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------

@dataclass
class A1Certificate:
    grid: np.ndarray = field(repr=False)
    ratio: np.ndarray = field(repr=False)
    ok: bool = False
    first_failure: float | None = None


def a1_certificate(f: ScalarFunction, lo: float = 1e-3, hi: float | None = None, n: int = 400) -> A1Certificate:
    """Grid witness that ``f(0) = 0``, ``f > 0`` and ``f(u)/u`` strictly increases."""
    hi = hi if hi is not None else 50.0
    u = np.geomspace(lo, hi, n)
    with np.errstate(all="ignore"):
        v = np.asarray(f(u), dtype=float)
    keep = np.isfinite(v)
    u, v = u[keep], v[keep]
    ratio = v / u
    f0 = float(f(0.0)) if f.domain_lo <= 0 else math.nan
    inc = np.diff(ratio) > 0
    ok = bool(f0 == 0.0 and np.all(v > 0) and np.all(inc))
    first = None
    if not np.all(inc):
        first = float(u[1:][~inc][0])
    if ok and f.analytic:
        # (f/u)' > 0 <=> u f' - f > 0, on a dense grid: catches narrow dips
        w = np.linspace(lo, float(u[-1]), 200 * n)
        with np.errstate(all="ignore"):
            g = w * np.asarray(f.deriv(1)(w), float) - np.asarray(f(w), float)
        bad = np.isfinite(g) & (g <= 0)
        if np.any(bad):
            ok, first = False, float(w[bad][0])
    return A1Certificate(u, ratio, ok, first)


class _CumulativeAntiderivative:
    """``F(t) = int_0^t f`` from a lazily grown table of unit-panel integrals.

    Evaluation costs one short quadrature on ``[floor(t), t]``. Returns
    ``inf`` beyond the point where ``f`` overflows.
    """

    def __init__(self, f: ScalarFunction, width: float = 0.5):
        self.f = f
        self.w = width
        self.cum = [0.0]
        self.stop = math.inf

    def _fn(self, s):
        return np.asarray(self.f(s), float) * np.ones_like(s)

    def _grow(self, k: int):
        w = self.w
        while len(self.cum) <= k and len(self.cum) * w < self.stop:
            n0 = len(self.cum) - 1
            edges = w * np.arange(n0, n0 + 65)
            try:
                vals, _ = integrate_panels(self._fn, edges, rtol=1e-14)
            except DomainError:
                vals = []
                for a in edges[:-1]:
                    try:
                        v, _ = integrate_panels(self._fn, [a, a + w], rtol=1e-14)
                    except DomainError:
                        self.stop = a
                        break
                    vals.append(float(v[0]))
                vals = np.asarray(vals)
            c = self.cum[-1] + np.cumsum(vals)
            if not np.all(np.isfinite(c)):
                bad = int(np.argmax(~np.isfinite(c)))
                c = c[:bad]
                self.stop = (n0 + bad) * w
            self.cum.extend(c.tolist())

    def one(self, t: float) -> float:
        if t <= 0:
            return 0.0
        if t >= self.stop:
            return math.inf
        k = int(t // self.w)
        self._grow(k)
        if k >= len(self.cum):
            return math.inf
        a = k * self.w
        if t == a:
            return self.cum[k]
        try:
            v, _ = integrate_panels(self._fn, [a, t], rtol=1e-14)
        except DomainError:
            return math.inf
        out = self.cum[k] + float(v[0])
        return out if math.isfinite(out) else math.inf

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return self.one(float(t))
        return np.array([self.one(float(v)) for v in t.ravel()]).reshape(t.shape)


def antiderivative_by_quadrature(f: ScalarFunction, name: str = "F") -> ScalarFunction:
    """``F(t) = int_0^t f``; returns ``inf`` once ``f`` overflows."""
    return ScalarFunction(_CumulativeAntiderivative(f), 0.0, name)


@dataclass(eq=False)
class NonlinearitySpec:
    name: str
    params: dict
    f: ScalarFunction
    F: ScalarFunction
    rho: float
    profile: SlowVariationProfile | None = None
    Lf: ScalarFunction | None = None
    g: RVClass | None = None
    m: int = 1
    alpha: float = 1.0
    closed_form_F: bool = True
    fixture: bool = False
    a1: A1Certificate | None = None
    notes: list = field(default_factory=list)

    @property
    def branch(self) -> str:
        return "nonregular" if self.profile is not None else "regular"

    @property
    def has_decomposition(self) -> bool:
        return self.profile is not None

    @property
    def lf_lower(self) -> float:
        """Threshold above which ``Lf`` and ``L'`` are positive."""
        return self.profile.B if self.profile is not None else 0.0

    @functools.cached_property
    def overflow_u(self) -> float:
        """Largest ``u`` (to 1e-6) at which ``f`` and ``f'`` are finite."""
        fp = self.f.deriv(1)

        def finite(u):
            try:
                with np.errstate(all="ignore"):
                    return math.isfinite(float(self.f(u))) and math.isfinite(float(fp(u)))
            except DomainError:
                return False

        lo, hi = 1.0, 2.0
        while finite(hi):
            lo, hi = hi, 2 * hi
            if hi > 1e300:
                return math.inf
        while hi - lo > 1e-6 * hi:
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if finite(mid) else (lo, mid)
        return lo

    def f_of_profile(self) -> ScalarFunction:
        """``u -> f(L(u))``."""
        return self.f.compose(self.profile.L, domain_lo=self.profile.B)


def _spec(name, params, f_expr, F_expr, rho, profile=None, Lf_expr=None, m=1, alpha=1.0, fixture=False,
          a1_hi=None):
    f = ScalarFunction(f_expr, 0.0, name)
    if F_expr is None:
        F = antiderivative_by_quadrature(f, f"F[{name}]")
        closed = False
    else:
        F = ScalarFunction(F_expr, 0.0, f"F[{name}]")
        closed = True
    Lf = None
    g = None
    if profile is not None:
        Lf = ScalarFunction(Lf_expr, profile.B, f"Lf[{name}]")
        g = RVClass(float(rho), Lf)
    spec = NonlinearitySpec(name, dict(params), f, F, float(rho), profile, Lf, g, m, alpha, closed, fixture)
    spec.a1 = a1_certificate(f, hi=a1_hi)
    return spec


def catalog_f(name: str, params=None) -> NonlinearitySpec:
    """Build a catalogued nonlinearity.

    Names: ``expm1``, ``sinh``, ``coshm1``, ``exp_log``,
    ``power_exp(beta, rho, alpha)``, ``exp2_m_e``, ``exp2_cos``,
    ``power(p)`` and the closed-form fixture ``exp_rho(rho)``.
    """
    p = dict(params or {})
    if name == "expm1":
        return _spec(name, p, sp.exp(U) - 1, sp.exp(U) - 1 - U, 1, log_profile(), (U - 1) / U)
    if name == "sinh":
        return _spec(name, p, sp.sinh(U), sp.cosh(U) - 1, 1, log_profile(), (1 - U ** -2) / 2)
    if name == "coshm1":
        return _spec(name, p, sp.cosh(U) - 1, sp.sinh(U) - U, 1, log_profile(), (U - 1) ** 2 / (2 * U ** 2))
    if name == "exp_log":
        return _spec(name, p, sp.exp(U) * sp.log(U + 1), None, 1, log_profile(), sp.log(sp.log(U) + 1))
    if name == "power_exp":
        beta = float(p.get("beta", 1.0))
        rho = float(p.get("rho", 1.0))
        alpha = float(p.get("alpha", 1.0))
        if not rho > 0:
            raise ValidationError("power_exp: rho must be > 0")
        if not alpha > 0:
            raise ValidationError("power_exp: alpha must be > 0")
        if not beta >= 1:
            raise ValidationError("power_exp: beta must be >= 1 for (A_1)")
        b, r, a = sp.nsimplify(beta), sp.nsimplify(rho), sp.nsimplify(alpha)
        prof = iterated_log_profile(1, alpha)
        p.update(beta=beta, rho=rho, alpha=alpha)
        return _spec(name, p, U ** b * sp.exp(r * U ** (1 / a)), None, rho, prof, sp.log(U) ** (a * b),
                     m=1, alpha=alpha)
    if name == "exp2_m_e":
        F = sp.Ei(sp.exp(U)) - sp.Ei(1) - E * U
        return _spec(name, p, sp.exp(sp.exp(U)) - E, F, 1, iterated_log_profile(2, 1.0), (U - E) / U, m=2,
                     a1_hi=6.0)
    if name == "exp2_cos":
        junction = float(p.get("junction", 1.2))
        # cos of a clamped argument: inf rather than NaN once e^{e^u} overflows
        g = ScalarFunction(U + sp.cos(sp.Min(U, sp.Float(1e300))), 0.0, "y+cos y")
        spec = compose_f(RVClass(1.0, ScalarFunction(1 + sp.cos(U) / U, 1.0)), iterated_log_profile(2, 1.0),
                         junction=junction, Lf=ScalarFunction(sp.Integer(1), 0.0, "1"), g_fn=g)
        spec.name, spec.params, spec.m = name, dict(p, junction=junction), 2
        spec.notes.append("Lf taken as 1: f(L(u))/u = 1 + cos(u)/u is slowly varying but not normalised")
        spec.F = ScalarFunction(_exp2_cos_antiderivative(spec.f, junction), 0.0, f"F[{name}]")
        return spec
    if name == "power":
        pw = float(p.get("p", 3.0))
        if not pw > 1:
            raise ValidationError("power: p must be > 1")
        q = sp.nsimplify(pw)
        p["p"] = pw
        return _spec(name, p, U ** q, U ** (q + 1) / (q + 1), pw - 1)
    if name == "exp_rho":
        rho = float(p.get("rho", 1.0))
        if not rho > 0:
            raise ValidationError("exp_rho: rho must be > 0")
        r = sp.nsimplify(rho)
        p["rho"] = rho
        spec = _spec(name, p, sp.exp(r * U), (sp.exp(r * U) - 1) / r, rho, log_profile(), sp.Integer(1),
                     fixture=True)
        spec.notes.append("closed-form fixture: f(0) = 1, so (A) and (A_1) do not hold near 0")
        return spec
    raise ValidationError(f"unknown nonlinearity {name!r}")


def _exp2_cos_antiderivative(f: ScalarFunction, junction: float, y_cut: float = 1e3):
    """Antiderivative of ``exp(exp u) + cos(exp(exp u))`` beyond the splice.

    Quadrature up to ``u_c = log log y_cut``; above it the ``exp(exp u)``
    part is ``Ei(e^u)`` and the cosine part is dropped: its remaining
    integral is ``int cos(y)/(y log y) dy``, bounded by ``2/(y_cut log y_cut)``.
    """
    u_c = max(math.log(math.log(y_cut)), junction)
    low = _CumulativeAntiderivative(f, width=0.05)
    F_c = low.one(u_c)
    ei_c = float(scipy.special.expi(math.exp(u_c)))

    def one(t):
        if t <= u_c:
            return low.one(t)
        with np.errstate(all="ignore"):
            v = F_c + float(scipy.special.expi(np.exp(t))) - ei_c
        return v if math.isfinite(v) else math.inf

    def F(t):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return one(float(t))
        return np.array([one(float(v)) for v in t.ravel()]).reshape(t.shape)

    return F


CATALOG_F = ("expm1", "sinh", "coshm1", "exp_log", "power_exp", "exp2_m_e", "exp2_cos", "power", "exp_rho")


def compose_f(g, Lprof: SlowVariationProfile, junction: float | None = None, splice: str = "power",
              Lf: ScalarFunction | None = None, g_fn: ScalarFunction | None = None,
              name: str = "composed") -> NonlinearitySpec:
    """``f(u) = g(L^{-1}(u))`` above the junction ``L(B)``, spliced below.

    ``g`` is an :class:`RVClass` (index ``rho > 0``); its function is
    ``u**rho * sv_part`` unless ``g_fn`` is given. The splice on
    ``[0, junction]`` is either ``"power"`` (``f(J) (u/J)**k`` with
    ``k = J f'(J)/f(J)``, matching value and slope) or ``"hermite"``
    (cubic through ``(0, 0)`` with slope ``f'(J)/2``). Both are checked for
    monotonicity, ``(A_1)`` and continuity; violations raise
    :class:`ValidationError` naming the interval.
    """
    if not g.index > 0:
        raise ValidationError("g must have positive index")
    gf = g_fn if g_fn is not None else g.function()
    if Lprof.inverse_expr is None:
        raise ValidationError("compose_f needs a profile with a closed-form inverse")
    J = float(Lprof.C) if junction is None else float(junction)
    if J < Lprof.C:
        raise ValidationError(f"junction {J:g} below L(B) = {Lprof.C:g}")
    high = gf.expr.subs(U, Lprof.inverse_expr)
    fJ = float(high.subs(U, J).evalf(30))
    dfJ = float(sp.diff(high, U).subs(U, J).evalf(30))
    if not (fJ > 0 and dfJ > 0):
        raise ValidationError(f"g o L^-1 must be positive and increasing at the junction u = {J:g}")
    Jr = sp.nsimplify(J)
    if splice == "power":
        k = J * dfJ / fJ
        if not k > 1:
            raise ValidationError(
                f"splice on [0, {J:g}] breaks (A_1): J f'(J)/f(J) = {k:.4g} <= 1")
        low = sp.Float(fJ, 30) * (U / Jr) ** sp.Float(k, 30)
    elif splice == "hermite":
        s0 = dfJ / 2
        c3 = (dfJ - 2 * fJ / J + s0) / J ** 2
        c2 = (3 * fJ / J - dfJ - 2 * s0) / J
        low = s0 * U + c2 * U ** 2 + c3 * U ** 3
    else:
        raise ValidationError(f"unknown splice {splice!r}")
    f_expr = sp.Piecewise((low, U < Jr), (high, True))
    f = ScalarFunction(f_expr, 0.0, name)
    lo_fn = ScalarFunction(low, 0.0)
    grid = np.linspace(0.0, J, 401)[1:]
    lv = np.asarray(lo_fn(grid), float)
    dv = np.asarray(lo_fn.deriv(1)(grid), float)
    if np.any(dv < 0) or np.any(lv <= 0):
        bad = grid[(dv < 0) | (lv <= 0)]
        raise ValidationError(f"splice not increasing/positive on [{bad.min():.4g}, {bad.max():.4g}]")
    ratio = lv / grid
    dec = np.diff(ratio) <= 0
    if np.any(dec):
        bad = grid[1:][dec]
        raise ValidationError(f"splice breaks (A_1) (f(u)/u not increasing) on [{bad.min():.4g}, {bad.max():.4g}]")
    if Lf is None:
        Lf = ScalarFunction(sp.simplify(gf.expr / U ** sp.nsimplify(g.index)), Lprof.B, "Lf")
    spec = NonlinearitySpec(name, {}, f, antiderivative_by_quadrature(f), float(g.index), Lprof, Lf, g,
                            Lprof.m, Lprof.alpha, False, False)
    spec.a1 = a1_certificate(f, hi=J * 4)
    # the (A_1) argument near infinity: u f'(u)/f(u) > 1
    u_hi = np.geomspace(J, J * 4, 50)
    with np.errstate(all="ignore"):
        fv = np.asarray(f(u_hi), float)
        dfv = np.asarray(f.deriv(1)(u_hi), float)
    spec.notes.append(f"min u f'/f on [{J:g}, {4 * J:g}] = {np.nanmin(u_hi * dfv / fv):.4g}")
    return spec


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class WeightSpec:
    """Boundary weight ``K`` on ``(0, nu)`` with ``K in NRV_theta(0+)``."""

    name: str
    params: dict
    K: ScalarFunction
    theta: float
    L_K: ScalarFunction | None
    nu: float
    IK_closed: ScalarFunction | None = None

    def __post_init__(self):
        self.Kp = self.K.deriv(1)

    def clamp(self, t):
        """Arguments above ``nu`` are clamped (the weight only matters near 0)."""
        t = np.asarray(t, dtype=float)
        if math.isfinite(self.nu):
            t = np.minimum(t, self.nu)
        return t

    def __call__(self, t):
        return self.K(self.clamp(t))

    def IK(self, t):
        """``int_0^t K(s) ds``."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0):
            raise DomainError("IK needs t >= 0")
        if self.IK_closed is not None and (not math.isfinite(self.nu) or np.all(t_arr <= self.nu)):
            return self.IK_closed(t_arr)
        if t_arr.ndim:
            return np.array([self._ik_quad(float(v)) for v in t_arr])
        return self._ik_quad(float(t_arr))

    @functools.lru_cache(maxsize=8192)
    def _ik_quad(self, t: float) -> float:
        if t == 0.0:
            return 0.0
        tc = min(t, self.nu)
        K = self.K
        # s = tc * exp(-w): endpoint-singularity-safe at s = 0
        res = improper_integral(lambda w: tc * np.exp(-w) * np.asarray(K(tc * np.exp(-w)), float), 0.0,
                                rtol=1e-13, first_width=1.0)
        val = res.value
        if t > tc:
            val += (t - tc) * float(K(tc))
        return val

    def b(self, d, eta=None):
        """``(1 + eta(d)) K(d)**2``."""
        k = np.asarray(self(d), dtype=float)
        out = k * k
        if eta is not None:
            out = out * (1.0 + np.asarray(eta(d), dtype=float))
        return out


def catalog_weight(name: str, params=None) -> WeightSpec:
    """Catalogued weights: ``power(theta)``, ``sin_power(theta)``,
    ``power_log(theta, alpha)``, ``power_itlog(theta, alpha, m)``,
    ``power_expgamma(theta, gamma)``."""
    p = dict(params or {})
    theta = float(p.get("theta", 0.0))
    if theta < 0:
        raise ValidationError("theta must be >= 0")
    th = sp.nsimplify(theta)
    p["theta"] = theta
    if name == "power":
        K = ScalarFunction(U ** th if theta else sp.Integer(1), 0.0, f"t^{theta:g}")
        IK = ScalarFunction(U ** (th + 1) / (th + 1), 0.0)
        return WeightSpec(name, p, K, theta, ScalarFunction(sp.Integer(1), 0.0), math.inf, IK)
    if name == "sin_power":
        K = ScalarFunction(sp.sin(U) ** th, 0.0, f"sin(t)^{theta:g}")
        return WeightSpec(name, p, K, theta, ScalarFunction((U * sp.sin(1 / U)) ** th, 2 / math.pi), math.pi / 2)
    if name == "power_log":
        alpha = float(p.get("alpha", 1.0))
        if not alpha > 0:
            raise ValidationError("alpha must be > 0")
        a = sp.nsimplify(alpha)
        p["alpha"] = alpha
        K = ScalarFunction(U ** th * sp.log(1 + U) ** a, 0.0, "t^theta log(1+t)^alpha")
        # log(1 + t) ~ t: the index is theta + alpha
        return WeightSpec(name, p, K, theta + alpha, ScalarFunction((U * sp.log(1 + 1 / U)) ** a, 0.0), math.inf)
    if name == "power_itlog":
        alpha = float(p.get("alpha", 1.0))
        m = int(p.get("m", 1))
        if not alpha > 0 or m < 1:
            raise ValidationError("power_itlog needs alpha > 0 and m >= 1")
        a = sp.nsimplify(alpha)
        p.update(alpha=alpha, m=m)
        K = ScalarFunction(U ** th * log_m(1 / U, m) ** (-a), 0.0, f"t^theta [log_{m}(1/t)]^-alpha")
        nu = 1.0 / float(exp_m(sp.Integer(1), m).evalf(30))
        return WeightSpec(name, p, K, theta, ScalarFunction(log_m(U, m) ** (-a), 1 / nu), nu)
    if name == "power_expgamma":
        gamma = float(p.get("gamma", 0.5))
        if not 0 < gamma < 1:
            raise ValidationError("gamma must lie in (0, 1)")
        g = sp.nsimplify(gamma)
        p["gamma"] = gamma
        K = ScalarFunction(U ** th * sp.exp(-sp.log(1 / U) ** g), 0.0, "t^theta exp(-(log 1/t)^gamma)")
        return WeightSpec(name, p, K, theta, ScalarFunction(sp.exp(-sp.log(U) ** g), 1.0), 1.0)
    raise ValidationError(f"unknown weight {name!r}")


CATALOG_WEIGHTS = ("power", "sin_power", "power_log", "power_itlog", "power_expgamma")


def smoothstep(tau):
    """C^1 cubic ramp from 0 (tau <= 0) to 1 (tau >= 1)."""
    t = np.clip(np.asarray(tau, dtype=float), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def weight_to_b(K: WeightSpec, domain, omega0: Omega0 | None = None, eta=None, collar_fraction: float = 0.05):
    """Coefficient ``b(x) = K(d(x))**2``, set to zero on ``omega0`` and
    blended with a C^1 cubic over a collar of width
    ``collar_fraction * diam(omega0)``. ``eta`` is an optional multiplicative
    perturbation ``b -> (1 + eta(d)) b``.
    """
    if omega0 is not None:
        omega0.validate(domain)
        collar = collar_fraction * omega0.diam

    def b(x):
        x = np.asarray(x, dtype=float)
        d = domain.distance(x)
        out = K.b(d, eta)
        if omega0 is not None:
            out = out * smoothstep(omega0.distance(x) / collar)
        return out

    return b
