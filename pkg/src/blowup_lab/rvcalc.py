"""Regular-variation calculus: index estimation, normalised slow variation,
the representation theorem, Karamata's theorem and the Keller-Osserman test.

Limits are certified by trend over a geometric grid plus a final-point
threshold, never by a single evaluation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .errors import DivergenceError, DomainError, ValidationError
from .functions import U, ScalarFunction
from .quadrature import improper_integral, integrate_panels, quad

FINAL_THRESHOLD = 1e-2
MIN_DECREASES = 3


def decreasing_trend(residuals, slack: float = 1e-13) -> bool:
    """True if ``|residuals|`` is non-increasing along the sequence."""
    r = np.abs(np.asarray(residuals, dtype=float))
    return bool(np.all(np.diff(r) <= slack * np.maximum(1.0, r[:-1])))


def trend_verdict(residuals, final_threshold: float = FINAL_THRESHOLD, exact_tol: float = 1e-12) -> bool:
    """Trend-based limit certificate.

    Passes when the residual magnitudes decrease along the sequence and the
    last one is below ``final_threshold``; series that are zero to
    ``exact_tol`` throughout (closed-form cases) pass as exact.
    """
    r = np.abs(np.asarray(residuals, dtype=float))
    if len(r) == 0 or not np.all(np.isfinite(r)):
        return False
    if np.all(r <= exact_tol):
        return True
    if len(r) < MIN_DECREASES + 1:
        return False
    return decreasing_trend(r) and r[-1] <= final_threshold


def geometric_grid(lo: float, hi: float, per_decade: int = 1) -> np.ndarray:
    """Points ``10^k`` from ``lo`` to ``hi`` (either order), ``per_decade`` per decade."""
    a, b = math.log10(lo), math.log10(hi)
    n = int(round(abs(b - a) * per_decade)) + 1
    return 10.0 ** np.linspace(a, b, n)


@dataclass(frozen=True)
class RVClass:
    """``R(u) = u**index * sv_part(u)``."""

    index: float
    sv_part: ScalarFunction
    normalised: bool = True

    def function(self) -> ScalarFunction:
        return ScalarFunction(U ** self.index, 0.0) * self.sv_part

    def check_normalised(self, u_grid=None) -> bool:
        grid = 10.0 ** np.arange(2, 9) if u_grid is None else u_grid
        res = normalised_sv_check(self.sv_part, grid)
        r = np.abs(res.r)
        return decreasing_trend(r) or r[-1] < 1e-3


@dataclass(frozen=True)
class RepresentationSpec:
    """``L(u) = M_hat * exp(int_B^u phi(t)/t dt)``."""

    M_hat: float
    phi_fn: ScalarFunction
    B: float

    def __post_init__(self):
        if not self.M_hat > 0:
            raise ValidationError("M_hat must be positive")
        if not self.B > 0:
            raise ValidationError("B must be positive")

    @classmethod
    def from_normalised(cls, L: ScalarFunction, B: float) -> RepresentationSpec:
        """Extract ``phi = u L'/L`` and ``M_hat = L(B)`` from a normalised ``L``."""
        if L.analytic:
            phi = ScalarFunction(sp.simplify(U * sp.diff(L.expr, U) / L.expr), L.domain_lo)
        else:
            Lp = L.deriv(1)
            phi = ScalarFunction(lambda u: u * Lp(u) / L(u), L.domain_lo)
        return cls(float(L(B)), phi, B)

    def phi_vanishes(self, at: float = 1e8, tol: float = 1e-2) -> bool:
        return abs(float(self.phi_fn(at))) < tol


@dataclass
class IndexEstimate:
    u: np.ndarray
    rho_hat: np.ndarray
    rho: float
    increments: np.ndarray
    monotone: bool
    band: tuple
    usable_u_max: float
    truncated: bool = False


def rv_index_estimate(R: ScalarFunction, xi: float, u_grid) -> IndexEstimate:
    """Estimate the index of regular variation from ``log(R(xi u)/R(u)) / log xi``.

    Overflowing points at the top of the grid are dropped; the largest
    usable grid point is reported. ``band`` is the ``(min, max)`` of the
    estimates over the upper half of the usable grid, which is how
    oscillating slowly varying factors show up.
    """
    if xi <= 0 or xi == 1:
        raise ValidationError("xi must be positive and different from 1")
    u = np.asarray(u_grid, dtype=float)
    if u.ndim != 1 or len(u) < 4 or np.any(np.diff(u) <= 0):
        raise ValidationError("u_grid must be strictly increasing with at least 4 points")
    with np.errstate(all="ignore"):
        r0 = np.asarray(R(u), dtype=float)
        r1 = np.asarray(R(xi * u), dtype=float)
    finite = np.isfinite(r0) & np.isfinite(r1) & (r0 != 0) & (r1 != 0)
    if np.any((r0 <= 0) & np.isfinite(r0)) or np.any((r1 <= 0) & np.isfinite(r1)):
        raise DomainError("R must be positive on the grid")
    ok = np.cumprod(finite).astype(bool)
    if ok.sum() < 2:
        raise DomainError("R overflows on the grid")
    truncated = not ok.all()
    u, r0, r1 = u[ok], r0[ok], r1[ok]
    rho_hat = np.log(r1 / r0) / math.log(xi)
    inc = np.diff(rho_hat)
    half = rho_hat[len(rho_hat) // 2:]
    return IndexEstimate(
        u=u,
        rho_hat=rho_hat,
        rho=float(rho_hat[-1]),
        increments=inc,
        monotone=bool(np.all(inc <= 0) or np.all(inc >= 0)),
        band=(float(half.min()), float(half.max())),
        usable_u_max=float(u[-1]),
        truncated=truncated,
    )


@dataclass
class SVCheck:
    u: np.ndarray
    r: np.ndarray
    verdict: bool
    analytic: bool


def normalised_sv_check(L: ScalarFunction, u_grid, final_threshold: float = FINAL_THRESHOLD) -> SVCheck:
    """Residual ``r(u) = u L'(u)/L(u)``; the verdict is positive when ``|r|``
    decreases along the grid and ``|r(u_max)| < final_threshold``."""
    u = np.asarray(u_grid, dtype=float)
    Lv = np.asarray(L(u), dtype=float)
    if np.any(Lv <= 0):
        raise DomainError("L must be positive on the grid")
    r = u * np.asarray(L.deriv(1)(u), dtype=float) / Lv
    r = np.broadcast_to(r, u.shape).copy()
    verdict = bool(np.all(np.abs(r) <= 1e-14) or (decreasing_trend(r) and abs(r[-1]) < final_threshold))
    return SVCheck(u, r, verdict, L.analytic)


def representation_eval(spec: RepresentationSpec, u, rtol: float = 1e-10) -> float:
    """``M_hat * exp(int_B^u phi(t)/t dt)``; integrated in ``s = log t``."""
    if u < spec.B:
        raise DomainError(f"u = {u:g} below representation threshold B = {spec.B:g}")
    s0, s1 = math.log(spec.B), math.log(u)
    if s1 == s0:
        return spec.M_hat
    phi = spec.phi_fn
    n = max(1, int(math.ceil(s1 - s0)))
    val = quad(lambda s: np.asarray(phi(np.exp(s)), dtype=float) * np.ones_like(s), s0, s1, rtol=rtol, n_panels=n)
    return spec.M_hat * math.exp(val)


@dataclass
class KaramataResult:
    u: float
    ratio: float
    limit: float
    residual: float
    tail_integral: float


def karamata_residual(R: ScalarFunction, rho: float, j: float, u: float, cutoff_factor: float = 1e3) -> KaramataResult:
    """Residual of ``u^{j+1} R(u) / int_u^inf x^j R(x) dx`` against ``-(j+rho+1)``.

    The tail integral is computed on dyadic panels up to ``cutoff_factor*u``
    and closed beyond with a power law fitted to the last two panels.
    """
    if j > -(rho + 1):
        raise ValidationError(f"need j <= -(rho+1); got j={j:g}, rho={rho:g}")
    n_panels = int(math.ceil(math.log2(cutoff_factor)))

    def integrand(x):
        return x ** j * np.asarray(R(x), dtype=float)

    res = improper_integral(integrand, u, rtol=1e-12, max_panels=n_panels, min_panels=n_panels, batch=n_panels)
    if res.tail_extrapolated is None or not math.isfinite(res.tail_extrapolated):
        raise DivergenceError("tail integral diverges: integrand not decaying")
    tail = res.value
    ratio = u ** (j + 1) * float(R(u)) / tail
    limit = -(j + rho + 1)
    return KaramataResult(u, ratio, limit, ratio - limit, tail)


@dataclass
class KellerOssermanResult:
    verdict: str  # "converges" | "diverges" | "inconclusive"
    value: float
    increments: np.ndarray = field(repr=False)

    @property
    def converges(self) -> bool:
        return self.verdict == "converges"


def keller_osserman(f, max_decades: int = 60, fast_ratio: float = 0.7,
                    flat_ratio: float = 0.97) -> KellerOssermanResult:
    """Test ``int_1^inf dt / sqrt(F(t)) < inf`` from decade increments.

    Increments over ``[10^k, 10^{k+1}]`` that decay geometrically (ratio
    at most ``fast_ratio`` over the last three decades) certify
    convergence; ratios at least ``flat_ratio`` certify divergence;
    anything in between is reported as inconclusive. ``f`` is a
    nonlinearity spec (its antiderivative ``F`` is used) or ``F`` itself.
    """
    F = getattr(f, "F", f)
    ln10 = math.log(10.0)

    def g(s):
        t = np.exp(s)
        with np.errstate(all="ignore"):
            Fv = np.asarray(F(t), dtype=float) * np.ones_like(t)
        return np.where(np.isinf(Fv), 0.0, t / np.sqrt(Fv))

    incs = []
    for k in range(max_decades):
        vals, _ = integrate_panels(g, [k * ln10, (k + 1) * ln10], rtol=1e-13)
        incs.append(float(vals[0]))
        total = sum(incs)
        if k >= 4 and incs[-1] <= 1e-15 * total:
            return KellerOssermanResult("converges", total, np.array(incs))
    incs = np.array(incs)
    ratios = incs[-3:] / incs[-4:-1]
    if np.all(ratios <= fast_ratio):
        r = ratios[-1]
        return KellerOssermanResult("converges", float(incs.sum() + incs[-1] * r / (1 - r)), incs)
    if np.all(ratios >= flat_ratio):
        return KellerOssermanResult("diverges", math.inf, incs)
    return KellerOssermanResult("inconclusive", math.nan, incs)


@dataclass
class RapidVariation:
    lam: float
    u: np.ndarray
    log_ratio: np.ndarray
    expected: str  # "0" | "1" | "inf"
    verdict: bool


def rapid_variation_check(Linv: ScalarFunction, lambdas, u_grid, magnitude: float = math.log(1e3)) -> list:
    """Check ``Linv(lam u)/Linv(u)`` tends to 0, 1, inf for ``lam <, =, > 1``.

    Works with ``log Linv`` to avoid overflow. For ``lam != 1`` the log ratio
    must be monotone in the expected direction with final magnitude at least
    ``magnitude``; for ``lam = 1`` it must vanish identically.
    """
    logL = Linv.log()
    u = np.asarray(u_grid, dtype=float)
    out = []
    for lam in lambdas:
        with np.errstate(all="ignore"):
            lr = np.asarray(logL(lam * u), dtype=float) - np.asarray(logL(u), dtype=float)
        lr = np.broadcast_to(lr, u.shape).copy()
        if lam == 1:
            out.append(RapidVariation(lam, u, lr, "1", bool(np.all(np.abs(lr) <= 1e-12))))
        elif lam < 1:
            ok = bool(np.all(np.diff(lr) < 0) and lr[-1] <= -magnitude)
            out.append(RapidVariation(lam, u, lr, "0", ok))
        else:
            ok = bool(np.all(np.diff(lr) > 0) and lr[-1] >= magnitude)
            out.append(RapidVariation(lam, u, lr, "inf", ok))
    return out
