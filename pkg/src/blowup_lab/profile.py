"""Blow-up profiles.

Non-regular branch: ``Phi(t)`` solves ``zeta(Phi(t)) = I_K(t)`` with

    zeta(x) = int_x^inf L'(y)**(1/2) y**(-(rho+1)/2) Lf(y)**(-1/2) dy,

and the boundary rate is ``L(Phi(d))``. Regular branch: ``h(t)`` solves
``int_h^inf ds / sqrt(2 F(s)) = I_K(t)`` and the rate is a closed constant
times ``h(d)``.
"""
from __future__ import annotations

import csv
import functools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError, OutOfRangeError, ValidationError
from .functions import iterated_log
from .quadrature import ImproperResult, improper_integral
from .rootfind import expand_bracket, safeguarded_newton
from .rvcalc import FINAL_THRESHOLD, trend_verdict

ZETA_RTOL = 1e-10
ROUNDTRIP_TOL = 1e-9
BETA_FRACTION = 0.99


def max_workers() -> int:
    """Thread cap from ``BLOWUP_LAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("BLOWUP_LAB_THREADS", "1")))
    except ValueError:
        return 1


def _require_nonregular(f):
    if not f.has_decomposition:
        raise ValidationError(f"{f.name} is on the regular branch: use the h profile (profile --h)")


# ---------------------------------------------------------------------------
# zeta and its inverse
# ---------------------------------------------------------------------------

def zeta_integrand(f):
    rho, Lp, Lf = f.rho, f.profile.Lp, f.Lf
    e = -(rho + 1.0) / 2.0

    def fn(y):
        y = np.asarray(y, dtype=float)
        return np.sqrt(np.asarray(Lp(y), float)) * y ** e / np.sqrt(np.asarray(Lf(y), float))

    return fn


def zeta_tail(f):
    """Karamata closure ``int_X^inf ~ (2/rho) L'(X)^(1/2) X^((1-rho)/2) Lf(X)^(-1/2)``."""
    rho, Lp, Lf = f.rho, f.profile.Lp, f.Lf

    def tail(X):
        return (2.0 / rho) * math.sqrt(float(Lp(X))) * X ** ((1.0 - rho) / 2.0) / math.sqrt(float(Lf(X)))

    return tail


def zeta_full(x: float, f, rtol: float = ZETA_RTOL) -> ImproperResult:
    """``zeta(x)`` with the quadrature diagnostics (tail closure, warnings)."""
    _require_nonregular(f)
    if not x >= f.lf_lower:
        raise DomainError(f"zeta needs x >= B = {f.lf_lower:g}; got {x:g}")
    return improper_integral(zeta_integrand(f), x, rtol=rtol, tail=zeta_tail(f), first_width=x,
                             min_panels=4, tail_check=1e-6)


def zeta(x: float, f, rtol: float = ZETA_RTOL) -> float:
    return zeta_full(x, f, rtol).value


class Profile:
    """``Phi`` for a fixed pair ``(f, K)``; caches ``beta`` and ``zeta(B)``."""

    def __init__(self, f, K, rtol: float = ZETA_RTOL):
        _require_nonregular(f)
        self.f = f
        self.K = K
        self.rtol = rtol
        self._integrand = zeta_integrand(f)
        self._tail = zeta_tail(f)
        self.log_B = math.log(f.lf_lower)

    def zeta(self, x: float) -> float:
        return improper_integral(self._integrand, x, rtol=self.rtol, tail=self._tail, first_width=x,
                                 min_panels=4).value

    @functools.cached_property
    def zeta_B(self) -> float:
        return self.zeta(self.f.lf_lower)

    @functools.cached_property
    def beta(self) -> float:
        """Largest ``t`` with ``I_K(t) < 0.99 zeta(B)`` (capped by the weight's range)."""
        target = BETA_FRACTION * self.zeta_B
        K = self.K
        hi = K.nu if math.isfinite(K.nu) else 1.0
        if float(K.IK(hi)) < target:
            if math.isfinite(K.nu):
                return hi
            while float(K.IK(hi)) < target:
                hi *= 2.0
                if hi > 1e12:
                    return math.inf
        lo = hi
        while float(K.IK(lo)) >= target:
            lo *= 0.5
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if float(K.IK(mid)) < target:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-14 * hi:
                break
        return lo

    def initial_guess(self, I: float) -> float:
        # exact for the e^{rho u} fixture, a starting point otherwise
        return math.log(max((2.0 / self.f.rho) / I, 1.0)) * (2.0 / self.f.rho)

    def phi(self, t: float, xtol: float = 1e-13):
        """``(Phi(t), round-trip residual, Newton iterations)``."""
        if not t > 0:
            raise OutOfRangeError(f"t = {t:g} must be positive", self.beta)
        if t >= self.beta:
            raise OutOfRangeError(f"t = {t:g} outside the solvable range (0, beta), beta = {self.beta:.6g}",
                                  self.beta)
        I = float(self.K.IK(t))
        logI = math.log(I)

        def g(z):
            return math.log(self.zeta(math.exp(z))) - logI

        def dg(z):
            x = math.exp(z)
            return -x * float(self._integrand(x)) / self.zeta(x)

        z0 = max(self.initial_guess(I), self.log_B + 1e-12)
        a, b, ga, gb = expand_bracket(g, z0, step=1.0, lo_limit=self.log_B)
        z, its = safeguarded_newton(g, dg, a, b, ga, gb, x0=z0, xtol=xtol)
        x = math.exp(z)
        resid = abs(self.zeta(x) - I) / I
        return x, resid, its

    def derivatives(self, t: float, phi: float):
        return phi_derivatives(t, phi, self.f, self.K)


@functools.lru_cache(maxsize=64)
def _profile_cached(f, K):
    return Profile(f, K)


def get_profile(f, K) -> Profile:
    """Shared :class:`Profile` for a ``(f, K)`` pair."""
    return _profile_cached(f, K)


def phi_solve(t: float, f, K) -> float:
    """``Phi(t) = zeta^{-1}(I_K(t))``."""
    x, resid, _ = get_profile(f, K).phi(t)
    if resid > ROUNDTRIP_TOL:
        raise NumericalError(f"round-trip residual {resid:.3e} exceeds {ROUNDTRIP_TOL:g} at t = {t:g}")
    return x


def phi_derivatives(t: float, phi: float, f, K):
    """``(Phi'(t), Phi''(t))`` from the closed relations obtained by
    differentiating ``zeta(Phi) = I_K``."""
    rho = f.rho
    Lp = float(f.profile.Lp(phi))
    Lpp = float(f.profile.Lpp(phi))
    Lf = float(f.Lf(phi))
    dLf = float(f.Lf.deriv(1)(phi))
    k = float(K(t))
    dk = float(K.Kp(t)) if t < K.nu else 0.0
    d1 = -k * phi ** ((rho + 1.0) / 2.0) * math.sqrt(Lf) / math.sqrt(Lp)
    bracket = (rho + 1.0) / 2.0 + dk * phi / (k * d1) + phi * dLf / (2.0 * Lf) - phi * Lpp / (2.0 * Lp)
    d2 = d1 * d1 / phi * bracket
    return d1, d2


# ---------------------------------------------------------------------------
# regular branch: h
# ---------------------------------------------------------------------------

class HProfile:
    """``h`` with ``int_h^inf ds / sqrt(2 F(s)) = I_K(t)``."""

    def __init__(self, f, K, rtol: float = 1e-12):
        from .rvcalc import keller_osserman

        ko = keller_osserman(f)
        if not ko.converges:
            raise ValidationError(f"Keller-Osserman integral for {f.name} is {ko.verdict}: h is undefined")
        self.f = f
        self.K = K
        self.rtol = rtol
        F = f.F

        def integrand(s):
            with np.errstate(all="ignore"):
                Fv = np.asarray(F(s), dtype=float) * np.ones_like(s)
            return np.where(np.isinf(Fv), 0.0, 1.0 / np.sqrt(2.0 * Fv))

        self._integrand = integrand

    def Y(self, u: float) -> float:
        """``int_u^inf ds / sqrt(2 F(s))``."""
        if not u > 0:
            raise DomainError("Y needs u > 0")
        return improper_integral(self._integrand, u, rtol=self.rtol, first_width=u, min_panels=8).value

    def h(self, t: float, xtol: float = 1e-14):
        if not t > 0:
            raise OutOfRangeError("t must be positive")
        I = float(self.K.IK(t))
        logI = math.log(I)

        def g(z):
            return math.log(self.Y(math.exp(z))) - logI

        def dg(z):
            x = math.exp(z)
            return -x * float(self._integrand(np.array([x]))[0]) / self.Y(x)

        z0 = math.log(1.0 / I)
        a, b, ga, gb = expand_bracket(g, z0, step=1.0)
        z, its = safeguarded_newton(g, dg, a, b, ga, gb, x0=z0, xtol=xtol)
        x = math.exp(z)
        return x, abs(self.Y(x) - I) / I, its

    def derivatives(self, t: float, h: float):
        """``h' = -K sqrt(2F(h))`` and ``h'' = -K' sqrt(2F(h)) + K^2 f(h)``."""
        s = math.sqrt(2.0 * float(self.f.F(h)))
        k = float(self.K(t))
        dk = float(self.K.Kp(t)) if t < self.K.nu else 0.0
        return -k * s, -dk * s + k * k * float(self.f.f(h))


@functools.lru_cache(maxsize=64)
def _h_cached(f, K):
    return HProfile(f, K)


def h_solve(t: float, f, K) -> float:
    x, resid, _ = _h_cached(f, K).h(t)
    if resid > ROUNDTRIP_TOL:
        raise NumericalError(f"round-trip residual {resid:.3e} exceeds {ROUNDTRIP_TOL:g} at t = {t:g}")
    return x


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------

def regular_constant(rho: float, theta: float) -> float:
    return ((2.0 * theta + rho + 2.0) / ((2.0 + rho) * (theta + 1.0))) ** (1.0 / rho)


def corollary_constant(rho: float, theta: float, m: int, alpha: float = 1.0) -> float:
    """Limit of ``u / (log_m(1/d))**alpha`` for the iterated-log families."""
    if m == 1:
        return (2.0 * (1.0 + theta) / rho) ** alpha
    return 1.0


@dataclass
class RatePrediction:
    kind: str  # "nonregular" | "regular"
    constant: float
    corollary_constant: float | None
    f: object = field(repr=False)
    K: object = field(repr=False)

    def eval(self, d):
        d_arr = np.asarray(d, dtype=float)
        if d_arr.ndim:
            return np.array([self.eval(float(v)) for v in d_arr])
        d = float(d_arr)
        if self.kind == "nonregular":
            return float(self.f.profile.L(phi_solve(d, self.f, self.K)))
        return self.constant * h_solve(d, self.f, self.K)

    __call__ = eval

    def corollary(self, d):
        """``C (log_m(1/d))**alpha``; only for the iterated-log families."""
        if self.corollary_constant is None:
            raise ValidationError("no corollary form for this nonlinearity")
        m, alpha = self.f.m, self.f.alpha
        return self.corollary_constant * np.asarray(iterated_log(1.0 / np.asarray(d, float), m)) ** alpha


def rate_predict(branch: str, f, K, a: float | None = None) -> RatePrediction:
    """Predicted boundary rate. ``a`` does not enter: the rate is the same
    for every admissible ``a``."""
    if branch not in ("nonregular", "regular"):
        raise ValidationError(f"unknown branch {branch!r}")
    if branch != f.branch:
        raise ValidationError(f"branch mismatch: {f.name} is on the {f.branch} branch")
    if branch == "nonregular":
        cc = None
        prof = f.profile
        if prof.name.startswith("(log_") or prof.name == "log":
            cc = corollary_constant(f.rho, K.theta, f.m, f.alpha)
        return RatePrediction("nonregular", 1.0, cc, f, K)
    return RatePrediction("regular", regular_constant(f.rho, K.theta), None, f, K)


# ---------------------------------------------------------------------------
# tables and limit checks
# ---------------------------------------------------------------------------

@dataclass
class ProfileTable:
    t_grid: np.ndarray
    phi: np.ndarray
    phi_p: np.ndarray
    phi_pp: np.ndarray
    rate: np.ndarray
    residual: np.ndarray
    beta: float
    meta: dict = field(default_factory=dict)

    COLUMNS = ("t", "phi", "phi_prime", "phi_double_prime", "rate", "residual")

    def rows(self):
        return zip(self.t_grid, self.phi, self.phi_p, self.phi_pp, self.rate, self.residual)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for row in self.rows():
                w.writerow([f"{float(v):.16e}" for v in row])

    def interpolator(self):
        """Log-log interpolant of the rate in ``t`` (for initial iterates)."""
        order = np.argsort(self.t_grid)
        lt = np.log(self.t_grid[order])
        lr = np.log(self.rate[order])

        def interp(d):
            d = np.asarray(d, dtype=float)
            ld = np.log(np.clip(d, self.t_grid.min(), self.t_grid.max()))
            return np.exp(np.interp(ld, lt, lr))

        return interp


def profile_table(f, K, t_grid, workers: int | None = None) -> ProfileTable:
    """Tabulate ``Phi`` and its derivatives; points solved independently."""
    prof = get_profile(f, K)
    t = np.asarray(t_grid, dtype=float)

    def one(tv):
        x, resid, its = prof.phi(float(tv))
        d1, d2 = phi_derivatives(float(tv), x, f, K)
        return x, d1, d2, resid, its

    n = workers or max_workers()
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as ex:
            out = list(ex.map(one, t))
    else:
        out = [one(tv) for tv in t]
    phi = np.array([o[0] for o in out])
    table = ProfileTable(
        t_grid=t,
        phi=phi,
        phi_p=np.array([o[1] for o in out]),
        phi_pp=np.array([o[2] for o in out]),
        rate=np.asarray(f.profile.L(phi), dtype=float) * np.ones_like(phi),
        residual=np.array([o[3] for o in out]),
        beta=prof.beta,
        meta={"zeta_rtol": prof.rtol, "roundtrip_max": float(max((o[3] for o in out), default=0.0)),
              "newton_iterations_max": int(max((o[4] for o in out), default=0))},
    )
    return table


def h_table(f, K, t_grid):
    hp = _h_cached(f, K)
    rows = []
    for tv in np.asarray(t_grid, dtype=float):
        x, resid, _ = hp.h(float(tv))
        d1, d2 = hp.derivatives(float(tv), x)
        rows.append((tv, x, d1, d2, regular_constant(f.rho, K.theta) * x, resid))
    arr = np.array(rows)
    return ProfileTable(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], arr[:, 5], math.inf,
                        {"branch": "regular"})


@dataclass
class LimitCheck:
    key: str
    label: str
    anchor: str
    limit: float
    t: np.ndarray
    values: np.ndarray
    residuals: np.ndarray
    verdict: bool

    def as_dict(self):
        return {
            "key": self.key,
            "label": self.label,
            "anchor": self.anchor,
            "limit": self.limit,
            "t": [float(v) for v in self.t],
            "values": [float(v) for v in self.values],
            "residuals": [float(v) for v in self.residuals],
            "verdict": "pass" if self.verdict else "fail",
        }


def lemma_pro_verify(f, K, t_grid, final_threshold: float = FINAL_THRESHOLD, table: ProfileTable | None = None):
    """Residual series and trend verdicts for the six limits of ``Phi``:

    (a) ``log_m Phi / log_m(1/t)``, (b) ``Phi Phi'' / Phi'^2``,
    (c) ``L(Phi) Phi / (L'(Phi) Phi'^2)``, (d) ``t Phi' / Phi``,
    (e) ``L'(Phi)^(1/2) Phi^((1-rho)/2) / (Lf(Phi)^(1/2) I_K(t))``,
    (f) ``log Phi / log t``.
    """
    tab = table if table is not None else profile_table(f, K, t_grid)
    t = tab.t_grid
    phi, d1, d2 = tab.phi, tab.phi_p, tab.phi_pp
    rho, theta, m = f.rho, K.theta, f.m
    prof = f.profile
    Lp = np.asarray(prof.Lp(phi), float)
    Lf = np.asarray(f.Lf(phi), float) * np.ones_like(phi)
    IK = np.asarray(K.IK(t), float)
    series = {
        "a": ("log_m Phi / log_m(1/t)", "iterated-log growth of Phi",
              np.asarray(iterated_log(phi, m)) / np.asarray(iterated_log(1.0 / t, m)),
              2.0 * (1.0 + theta) / rho if m == 1 else 1.0),
        "b": ("Phi Phi'' / Phi'^2", "convexity ratio of Phi", phi * d2 / d1 ** 2, 1.0 + rho / (2.0 * (theta + 1.0))),
        "c": ("L(Phi) Phi / (L'(Phi) Phi'^2)", "profile-derivative ratio",
              np.asarray(prof.L(phi), float) * phi / (Lp * d1 ** 2), 0.0),
        "d": ("t Phi' / Phi", "index of Phi at 0+", t * d1 / phi, -2.0 * (theta + 1.0) / rho),
        "e": ("L'(Phi)^1/2 Phi^((1-rho)/2) / (Lf(Phi)^1/2 I_K)", "Karamata tail ratio",
              np.sqrt(Lp) * phi ** ((1.0 - rho) / 2.0) / (np.sqrt(Lf) * IK), rho / 2.0),
        "f": ("log Phi / log t", "logarithmic growth of Phi", np.log(phi) / np.log(t), -2.0 * (1.0 + theta) / rho),
    }
    out = []
    for key, (label, anchor, values, limit) in series.items():
        res = values - limit
        out.append(LimitCheck(key, label, anchor, limit, t, values, res, trend_verdict(res, final_threshold)))
    return out
