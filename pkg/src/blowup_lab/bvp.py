"""Large solutions of ``-Lap u = a u - b(x) f(u)`` on intervals, balls and annuli.

The boundary datum ``u = inf`` is replaced by ``u = M`` and ``M`` is
increased along a doubling schedule; interior values converge monotonically.
Each truncated problem is a tridiagonal Newton solve on a boundary-graded mesh.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .errors import ExistenceGateError, NumericalError, ValidationError
from .funcatalog import weight_to_b
from .geometry import Annulus, Ball, Interval, Omega0
from .profile import get_profile, h_table, phi_derivatives, profile_table, rate_predict

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 100
GRADING_Q = 3.0
LAYER_NODES = 4096


# ---------------------------------------------------------------------------
# problem and mesh
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ProblemSpec:
    a: float
    f: object
    weight: object
    domain: object
    omega0: Omega0 | None = None
    eta: object = None
    gates: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.omega0 is not None:
            self.omega0.validate(self.domain)
        self.b = weight_to_b(self.weight, self.domain, self.omega0, self.eta)

    @property
    def lambda_inf_1(self) -> float:
        if "lambda_inf_1" not in self.gates:
            self.gates["lambda_inf_1"] = eigen_dirichlet(self.omega0_region(), 1024)
        return self.gates["lambda_inf_1"]

    def omega0_region(self):
        if self.omega0 is None:
            return None
        return self.omega0.as_domain(self.domain)

    def check_existence(self):
        """Raise :class:`ExistenceGateError` unless ``a < lambda_inf_1``."""
        lam = self.lambda_inf_1
        self.gates["existence"] = bool(self.a < lam)
        if not self.a < lam:
            raise ExistenceGateError(self.a, lam)
        return lam

    def certificates(self) -> dict:
        """(A_1) grid certificate and the weight hypothesis (index and monotonicity)."""
        K = self.weight
        t = 10.0 ** -np.arange(2, 9, dtype=float)
        idx = t * np.asarray(K.Kp(t), float) / np.asarray(K(t), float)
        h_ok = bool(abs(idx[-1] - K.theta) < 1e-2)
        if K.theta == 0:
            s = np.linspace(1e-6, min(K.nu, self.domain.max_distance), 400)
            h_ok = h_ok and bool(np.all(np.diff(np.asarray(K(s), float)) >= 0))
        self.gates["A1"] = bool(self.f.a1.ok) if self.f.a1 is not None else False
        self.gates["H"] = h_ok
        return {"A1": self.gates["A1"], "H": h_ok}


@dataclass
class Mesh:
    x: np.ndarray  # node coordinates (x for intervals, r for radial domains)
    d: np.ndarray  # distance to the blow-up boundary
    boundary: np.ndarray  # bool mask of Dirichlet nodes
    radial: bool = False
    N: int = 1
    q: float = GRADING_Q
    n: int = LAYER_NODES

    @property
    def h(self):
        return np.diff(self.x)


def graded_mesh(domain, n: int = LAYER_NODES, q: float = GRADING_Q) -> Mesh:
    """Nodes with ``d(x_i) = H (i/n)**q`` in each boundary layer."""
    if n < 8:
        raise ValidationError("need at least 8 nodes per layer")
    s = (np.arange(n + 1) / n) ** q
    if isinstance(domain, Ball):
        R = domain.R
        x = R * (1.0 - s[::-1])
        x[0] = 0.0
        bnd = np.zeros(n + 1, bool)
        bnd[-1] = True
        return Mesh(x, R - x, bnd, True, domain.N, q, n)
    lo, hi = domain.lo, domain.hi
    H = 0.5 * (hi - lo)
    left = lo + H * s
    right = hi - H * s[::-1]
    x = np.concatenate([left, right[1:]])
    x[n] = 0.5 * (lo + hi)
    bnd = np.zeros(len(x), bool)
    bnd[0] = bnd[-1] = True
    d = np.minimum(x - lo, hi - x)
    return Mesh(x, d, bnd, isinstance(domain, Annulus), getattr(domain, "N", 1), q, n)


def laplacian_coefficients(mesh: Mesh):
    """Three-point coefficients ``(lo, di, up)`` of the (radial) Laplacian
    at interior nodes; boundary rows are zero. The centre of a ball uses the
    symmetric limit ``2 N (u_1 - u_0) / h_0**2``."""
    x = mesh.x
    n = len(x)
    h = np.diff(x)
    lo = np.zeros(n)
    di = np.zeros(n)
    up = np.zeros(n)
    i = np.arange(1, n - 1)
    hm, hp = h[i - 1], h[i]
    lo[i] = 2.0 / (hm * (hm + hp))
    up[i] = 2.0 / (hp * (hm + hp))
    di[i] = -(lo[i] + up[i])
    if mesh.radial and mesh.N > 1:
        # nonuniform three-point first derivative (exact for quadratics)
        c = (mesh.N - 1) / x[i]
        lo[i] -= c * hp / (hm * (hm + hp))
        di[i] += c * (hp - hm) / (hm * hp)
        up[i] += c * hm / (hp * (hm + hp))
    if isinstance(mesh, Mesh) and mesh.radial and x[0] == 0.0 and not mesh.boundary[0]:
        k = 2.0 * mesh.N / h[0] ** 2
        di[0], up[0] = -k, k
    return lo, di, up


def apply_laplacian(coef, u):
    lo, di, up = coef
    out = di * u
    out[1:] += lo[1:] * u[:-1]
    out[:-1] += up[:-1] * u[1:]
    return out


# ---------------------------------------------------------------------------
# truncated problems
# ---------------------------------------------------------------------------

@dataclass
class SolutionGrid:
    mesh: Mesh = field(repr=False)
    u: np.ndarray = field(repr=False)
    M: float
    newton_stats: dict
    residual: np.ndarray = field(repr=False)
    converged_interior: bool = False
    interior_change: float = math.nan
    projected: bool = False

    @property
    def x(self):
        return self.mesh.x

    @property
    def d(self):
        return self.mesh.d

    def value_at(self, x0: float) -> float:
        return float(np.interp(x0, self.mesh.x, self.u))


class _System:
    """Residual ``Lap u + a u - b f(u)`` at interior nodes, ``u - M`` at the boundary."""

    def __init__(self, p: ProblemSpec, mesh: Mesh):
        self.p = p
        self.mesh = mesh
        self.coef = laplacian_coefficients(mesh)
        self.bvals = np.asarray(p.b(mesh.x), dtype=float) * np.ones_like(mesh.x)
        self.f = p.f.f
        self.fp = p.f.f.deriv(1)
        self.inner = ~mesh.boundary
        self.a = float(p.a)

    def _f(self, u):
        with np.errstate(all="ignore"):
            return np.asarray(self.f(u), float) * np.ones_like(u)

    def residual(self, u, M):
        uu = np.maximum(u, 0.0)
        Lu = apply_laplacian(self.coef, u)
        fb = self.bvals * self._f(uu)
        F = Lu + self.a * u - fb
        lo, di, up = self.coef
        scale = np.abs(di * u) + np.abs(fb) + abs(self.a) * np.abs(u)
        scale[1:] += np.abs(lo[1:] * u[:-1])
        scale[:-1] += np.abs(up[:-1] * u[1:])
        F = np.where(self.inner, F, u - M)
        scale = np.where(self.inner, scale, max(abs(M), 1.0))
        return F, np.maximum(scale, 1e-300)

    def jacobian(self, u):
        lo, di, up = self.coef
        uu = np.maximum(u, 0.0)
        with np.errstate(all="ignore"):
            fp = np.asarray(self.fp(uu), float) * np.ones_like(u)
        d = di + self.a - self.bvals * fp
        lo2, up2 = lo.copy(), up.copy()
        b = self.mesh.boundary
        d = np.where(b, 1.0, d)
        lo2[b] = 0.0
        up2[b] = 0.0
        return lo2, d, up2


def _polish(sys_: _System, u, M, F, scale, rn):
    """One undamped Newton step after convergence, kept only if it lowers the
    residual: removes stopping noise that would otherwise show up as tiny
    violations of monotonicity in ``M``."""
    lo, di, up = sys_.jacobian(u)
    trial = u + kernels.solve_tridiagonal(lo, di, up, -F)
    Ft, _ = sys_.residual(trial, M)
    rt = float(np.max(np.abs(Ft / scale)))
    if math.isfinite(rt) and rt < rn and np.all(trial[sys_.inner] >= 0.0):
        return trial, rt
    return u, rn


def newton_solve(p: ProblemSpec, mesh: Mesh, M: float, u0, tol: float = NEWTON_TOL,
                 max_iter: int = NEWTON_MAX_ITER, system: _System | None = None):
    """Damped Newton with Armijo backtracking on the row-scaled residual."""
    sys_ = system or _System(p, mesh)
    u = np.array(u0, dtype=float)
    u[mesh.boundary] = M
    history = []
    projected = False
    for it in range(max_iter + 1):
        F, scale = sys_.residual(u, M)
        r = F / scale
        rn = float(np.max(np.abs(r)))
        history.append(rn)
        if not math.isfinite(rn):
            raise NumericalError(f"non-finite residual at M = {M:g}", history)
        if rn <= tol:
            u, rn = _polish(sys_, u, M, F, scale, rn)
            return u, {"iterations": it, "residual": rn, "history": history, "projected": projected}
        if it == max_iter:
            break
        lo, di, up = sys_.jacobian(u)
        delta = kernels.solve_tridiagonal(lo, di, up, -F)
        phi0 = float(np.dot(r, r))
        lam = 1.0
        # keep iterates nonnegative (fraction-to-boundary rule); the
        # projection inside the residual is only a fallback
        neg = sys_.inner & (delta < 0.0) & (u > 0.0)
        if np.any(neg):
            lam = min(1.0, 0.995 * float(np.min(u[neg] / -delta[neg])))
        for _ in range(40):
            trial = u + lam * delta
            if np.any(trial[sys_.inner] < 0.0):
                projected = True
            Ft, _ = sys_.residual(trial, M)
            rt = Ft / scale
            phit = float(np.dot(rt, rt))
            if math.isfinite(phit) and phit <= (1.0 - 1e-4 * lam) * phi0:
                break
            lam *= 0.5
        else:
            raise NumericalError(f"line search failed at M = {M:g}", history)
        u = trial
    raise NumericalError(f"Newton did not converge in {max_iter} iterations at M = {M:g}", history)


def solve_level(p: ProblemSpec, mesh: Mesh, M: float, u0, tol: float = NEWTON_TOL,
                max_iter: int = NEWTON_MAX_ITER, system: _System | None = None, min_step: float = 1e-4):
    """Newton solve; for ``a > 0`` falls back to continuation in ``a`` from
    ``a = 0`` (where the problem is monotone) with adaptive steps."""
    sys_ = system or _System(p, mesh)
    try:
        return newton_solve(p, mesh, M, u0, tol, max_iter, sys_)
    except NumericalError:
        if not p.a > 0:
            raise
    target = float(p.a)
    try:
        sys_.a = 0.0
        u, stats = newton_solve(p, mesh, M, u0, tol, max_iter, sys_)
        a_cur, step, steps = 0.0, target / 4.0, 0
        while a_cur < target:
            a_next = min(target, a_cur + step)
            sys_.a = a_next
            try:
                u_new, stats = newton_solve(p, mesh, M, u, tol, max_iter, sys_)
            except NumericalError:
                step *= 0.5
                if step < min_step * target:
                    raise
                continue
            u, a_cur = u_new, a_next
            steps += 1
            step = min(2.0 * step, target - a_cur) if a_cur < target else step
        stats = dict(stats, a_continuation_steps=steps)
        return u, stats
    finally:
        sys_.a = target


def solve_truncated(p: ProblemSpec, M: float, mesh: Mesh | None = None, u0=None, tol: float = NEWTON_TOL,
                    max_iter: int = NEWTON_MAX_ITER, check_gate: bool = True) -> SolutionGrid:
    """Solve the problem with boundary datum ``M``."""
    if check_gate:
        p.check_existence()
    if not M >= 0:
        raise ValidationError("M must be non-negative")
    mesh = mesh or graded_mesh(p.domain)
    if u0 is None:
        u0 = initial_profile(p, mesh, M)
    sys_ = _System(p, mesh)
    u, stats = solve_level(p, mesh, M, u0, tol, max_iter, sys_)
    F, scale = sys_.residual(u, M)
    return SolutionGrid(mesh, u, M, stats, F / scale, projected=stats["projected"])


# ---------------------------------------------------------------------------
# continuation in M
# ---------------------------------------------------------------------------

def prediction_table(p: ProblemSpec, n: int = 60):
    """Coarse table of the predicted rate, interpolated in ``log d``."""
    f, K = p.f, p.weight
    dmax = p.domain.max_distance
    if f.has_decomposition:
        beta = get_profile(f, K).beta
        top = min(0.9 * beta, dmax)
        t = np.geomspace(top, 1e-14 * top, n)
        return profile_table(f, K, t, workers=1).interpolator()
    top = min(dmax, K.nu if math.isfinite(K.nu) else dmax)
    t = np.geomspace(top, 1e-12 * top, n)
    return h_table(f, K, t).interpolator()


def initial_profile(p: ProblemSpec, mesh: Mesh, M: float, interp=None):
    """The predicted rate clipped at ``M``."""
    if interp is None:
        interp = prediction_table(p)
    d = np.maximum(mesh.d, 1e-300)
    return np.minimum(interp(d), M)


def m_schedule(M0: float = 4.0, k_max: int = 20, M_max: float | None = None, overflow: float = math.inf):
    """``M0 * 2**k`` capped at ``M_max`` and below the overflow point of ``f``."""
    cap = min(M_max if M_max is not None else math.inf, 0.99 * overflow)
    out = []
    for k in range(k_max + 1):
        M = M0 * 2.0 ** k
        if M >= cap:
            if math.isfinite(cap) and (not out or out[-1] < cap):
                out.append(cap)
            break
        out.append(M)
    return out


@dataclass
class LargeSolution:
    solution: SolutionGrid
    stages: list
    converged: bool
    monotone: bool
    interior_changes: list
    monotonicity_violation: float
    d_min: float
    report: dict = field(default_factory=dict)


def solve_large(p: ProblemSpec, tol_interior: float = 1e-6, d_min: float = 0.1, M0: float = 4.0,
                k_max: int = 20, M_max: float | None = None, mesh: Mesh | None = None, start: str = "profile",
                newton_tol: float = NEWTON_TOL, newton_max_iter: int = NEWTON_MAX_ITER,
                stop_on_convergence: bool = True) -> LargeSolution:
    """Monotone continuation over ``M = M0 * 2**k``.

    Stops when the largest change on ``{d >= d_min}`` between consecutive
    levels drops below ``tol_interior`` (unless ``stop_on_convergence`` is
    false, in which case the full schedule runs). ``start`` selects the
    initial iterate: ``"profile"`` (max of the previous solution and the
    clipped rate), ``"constant"`` (``u = M`` on the first level, then the
    previous solution as is) or ``"overrelaxed"`` (1.5 times the profile
    start, clipped at ``M``).
    """
    lam = p.check_existence()
    mesh = mesh or graded_mesh(p.domain)
    interp = prediction_table(p)
    sched = m_schedule(M0, k_max, M_max, p.f.overflow_u)
    comp = mesh.d >= d_min
    if not np.any(comp):
        raise ValidationError(f"no nodes with d >= d_min = {d_min:g}")
    sys_ = _System(p, mesh)
    stages = []
    changes = []
    prev = None
    converged = False
    viol = 0.0
    for M in sched:
        clip = np.minimum(interp(np.maximum(mesh.d, 1e-300)), M)
        base = clip if prev is None else np.maximum(prev.u, clip)
        if start == "profile":
            u0 = base
        elif start == "constant":
            # constant datum first, then the previous level unchanged
            u0 = np.full_like(mesh.x, M) if prev is None else prev.u.copy()
        elif start == "overrelaxed":
            u0 = np.minimum(1.5 * base, M)
        else:
            raise ValidationError(f"unknown start {start!r}")
        u, stats = solve_level(p, mesh, M, u0, newton_tol, newton_max_iter, sys_)
        F, scale = sys_.residual(u, M)
        sol = SolutionGrid(mesh, u, M, stats, F / scale, projected=stats["projected"])
        if prev is not None:
            change = float(np.max(np.abs(u[comp] - prev.u[comp])))
            changes.append(change)
            sol.interior_change = change
            viol = max(viol, float(np.max(prev.u - u - 1e-9 * np.maximum(1.0, np.abs(u)))))
            if change < tol_interior:
                sol.converged_interior = True
                converged = True
        stages.append(sol)
        prev = sol
        if converged and stop_on_convergence:
            break
    final = stages[-1]
    report = {
        "lambda_inf_1": lam,
        "schedule": [s.M for s in stages],
        "interior_changes": changes,
        "newton_iterations": [s.newton_stats["iterations"] for s in stages],
        "newton_residuals": [s.newton_stats["residual"] for s in stages],
        "converged_interior": converged,
        "monotone_in_M": viol <= 0.0,
        "projected": any(s.projected for s in stages),
    }
    return LargeSolution(final, stages, converged, viol <= 0.0, changes, max(viol, 0.0), d_min, report)


# ---------------------------------------------------------------------------
# eigenvalue gate
# ---------------------------------------------------------------------------

def eigen_dirichlet(region, n_nodes: int = 1024, tol: float = 1e-10, max_iter: int = 500, seed: int = 12345):
    """Smallest Dirichlet eigenvalue of ``-Lap`` on ``region`` by inverse
    iteration on a uniform mesh (radial operator in symmetric form for balls
    and annuli). Returns ``inf`` when ``region`` is ``None``."""
    if region is None:
        return math.inf
    if n_nodes < 64:
        raise ValidationError("n_nodes must be at least 64")
    if isinstance(region, Interval) or (getattr(region, "N", 1) == 1 and not isinstance(region, Ball)):
        lo, hi, N, centre = region.lo, region.hi, 1, False
    elif isinstance(region, Ball):
        lo, hi, N, centre = 0.0, region.R, region.N, True
    else:
        lo, hi, N, centre = region.R0, region.R1, region.N, False
    r = np.linspace(lo, hi, n_nodes + 1)
    h = r[1] - r[0]
    faces = 0.5 * (r[:-1] + r[1:])
    wf = faces ** (N - 1) if N > 1 else np.ones_like(faces)
    # unknowns: interior nodes (plus the centre for balls)
    idx = np.arange(0 if centre else 1, n_nodes)
    rr = r[idx]
    if N > 1:
        mass = rr ** (N - 1) * h
        if centre:
            mass[0] = (h / 2.0) ** N / N
    else:
        mass = np.full(len(idx), h)
    left = wf[idx - 1] / h if not centre else np.concatenate([[0.0], wf[idx[1:] - 1] / h])
    right = wf[idx] / h
    di = left + right
    lo_c = np.concatenate([[0.0], -left[1:]])
    up_c = np.concatenate([-right[:-1], [0.0]])
    rng = np.random.default_rng(seed)
    v = 1.0 + 0.1 * rng.random(len(idx))
    v /= math.sqrt(float(np.dot(v, mass * v)))
    lam_old = math.inf
    history = []
    for _ in range(max_iter):
        w = kernels.solve_tridiagonal(lo_c, di, up_c, mass * v)
        Aw = kernels.tridiag_matvec(lo_c, di, up_c, w)
        lam = float(np.dot(w, Aw) / np.dot(w, mass * w))
        history.append(lam)
        v = w / math.sqrt(float(np.dot(w, mass * w)))
        if abs(lam - lam_old) <= tol * abs(lam):
            return lam
        lam_old = lam
    raise NumericalError("inverse iteration stagnated", history)


# ---------------------------------------------------------------------------
# rate fit, sub/supersolutions, uniqueness
# ---------------------------------------------------------------------------

@dataclass
class RateFit:
    d: np.ndarray
    u: np.ndarray
    pred: np.ndarray
    ratio: np.ndarray
    d_cut: float
    verdict: bool

    def as_dict(self):
        return {"d": self.d.tolist(), "u": self.u.tolist(), "pred": self.pred.tolist(),
                "ratio": self.ratio.tolist(), "d_cut": self.d_cut, "verdict": "pass" if self.verdict else "fail"}


def saturation_cut(sol: SolutionGrid, factor: float = 100.0) -> float:
    """``factor`` times the largest ``d`` where ``u >= 0.99 M`` (truncation-contaminated nodes)."""
    d = sol.mesh.d
    sat = (sol.u >= 0.99 * sol.M) & (d > 0)
    if np.any(sat):
        return factor * float(np.max(d[sat]))
    return factor * float(np.min(d[d > 0]))


def boundary_rate_fit(sol: SolutionGrid, pred, d_samples=None, final_threshold: float = 0.05,
                      d_max: float | None = None, cut_factor: float = 100.0) -> RateFit:
    """Ratio ``u(d)/pred(d)`` at sample distances (default ``10**-k``) above
    the saturation cut, interpolated in ``log d`` from one boundary layer."""
    mesh = sol.mesh
    d_cut = saturation_cut(sol, cut_factor)
    n = mesh.n
    dl, ul = mesh.d[: n + 1], sol.u[: n + 1]
    if mesh.radial and not mesh.boundary[0]:
        dl, ul = mesh.d[::-1], sol.u[::-1]
    keep = dl > 0
    dl, ul = dl[keep], ul[keep]
    order = np.argsort(dl)
    dl, ul = dl[order], ul[order]
    top = d_max if d_max is not None else 0.1 * mesh.d.max()
    usable = (dl >= d_cut) & (dl <= top)
    if usable.sum() < 5:
        raise ValidationError(f"insufficient resolution: {int(usable.sum())} usable nodes above d_cut = {d_cut:.3g}")
    if d_samples is None:
        k = np.arange(math.ceil(-math.log10(top)), math.floor(-math.log10(d_cut)) + 1)
        d_samples = 10.0 ** (-k.astype(float))
    ds = np.asarray([v for v in d_samples if d_cut <= v <= top], dtype=float)
    ds = np.sort(ds)[::-1]
    if len(ds) == 0:
        raise ValidationError("no sample distance inside the usable range")
    us = np.interp(np.log(ds), np.log(dl), ul)
    pv = np.asarray([pred(float(v)) for v in ds], dtype=float)
    ratio = us / pv
    dev = np.abs(ratio - 1.0)
    verdict = bool(len(dev) >= 2 and np.all(np.diff(dev) < 0) and dev[-1] <= final_threshold)
    return RateFit(ds, us, pv, ratio, d_cut, verdict)


def theta_pm(rho: float, theta: float, eps0: float):
    """``(theta_+, theta_-)`` scaling factors of the super/subsolutions."""
    if not 0 < eps0 < 0.5:
        raise ValidationError("epsilon0 must lie in (0, 1/2)")
    base = rho / (2.0 * (1.0 + theta))
    return (base / (1.0 - 2.0 * eps0)) ** (1.0 / rho), (base / (1.0 + 2.0 * eps0)) ** (1.0 / rho)


@dataclass
class SubSuperReport:
    side: str
    sigma: float
    eps0: float
    vartheta: float
    delta: float
    certified: bool
    d: np.ndarray
    residual: np.ndarray
    violations: list
    warnings: list


def _subsuper_values(p: ProblemSpec, s, vt):
    """``w = L(vt Phi(s))`` and its first two derivatives in ``s``."""
    f, K = p.f, p.weight
    prof = get_profile(f, K)
    L = f.profile
    w = np.empty(len(s))
    w1 = np.empty(len(s))
    w2 = np.empty(len(s))
    for i, sv in enumerate(s):
        phi, _, _ = prof.phi(float(sv))
        d1, d2 = phi_derivatives(float(sv), phi, f, K)
        y = vt * phi
        Lp, Lpp = float(L.Lp(y)), float(L.Lpp(y))
        w[i] = float(L.L(y))
        w1[i] = Lp * vt * d1
        w2[i] = Lpp * (vt * d1) ** 2 + Lp * vt * d2
    return w, w1, w2


def subsuper_residual(p: ProblemSpec, sigma: float, eps0: float, side: str, delta: float | None = None,
                      near_mesh=None, margin: float | None = None, max_halvings: int = 30) -> SubSuperReport:
    """Signed residual ``Lap w + a w - b f(w)`` of ``w = L(vt Phi(d -+ sigma))``.

    ``side = "+"`` (supersolution, residual must be <= 0) or ``"-"``
    (subsolution, >= 0). On a sign violation ``delta`` is halved and the
    largest certified ``delta`` is reported.
    """
    if side not in ("+", "-"):
        raise ValidationError("side must be '+' or '-'")
    f, K = p.f, p.weight
    if not f.has_decomposition:
        raise ValidationError("sub/supersolutions need the non-regular branch")
    prof = get_profile(f, K)
    if delta is None:
        delta = 0.5 * min(prof.beta, p.domain.max_distance)
    if not 0 < sigma < delta:
        raise ValidationError(f"sigma must lie in (0, delta) = (0, {delta:g})")
    tp, tm = theta_pm(f.rho, K.theta, eps0)
    vt = tp if side == "+" else tm
    warn = []
    if tp / tm - 1.0 < 1e-2:
        warn.append(f"degenerate gap: theta_+/theta_- - 1 = {tp / tm - 1.0:.3e}")
    margin = margin if margin is not None else 1e-3 * sigma
    violations = []
    for _ in range(max_halvings + 1):
        if side == "+":
            lo, hi = sigma + margin, delta
        else:
            lo, hi = margin, delta - sigma
        if not hi > lo:
            break
        d = np.asarray(near_mesh, float) if near_mesh is not None else np.geomspace(lo, hi, 200)
        d = d[(d >= lo) & (d <= hi)]
        s = d - sigma if side == "+" else d + sigma
        w, w1, w2 = _subsuper_values(p, s, vt)
        # Lap w = w'' |grad d|^2 + w' Lap d, with |grad d| = 1
        x = _point_at_distance(p.domain, d)
        lap_d = np.asarray(p.domain.laplacian_of_distance(d), float) * np.ones_like(d)
        bv = np.asarray(p.b(x), float) * np.ones_like(d)
        with np.errstate(all="ignore"):
            fw = np.asarray(f.f(w), float) * np.ones_like(w)
        res = w2 + w1 * lap_d + p.a * w - bv * fw
        bad = res > 0 if side == "+" else res < 0
        if not np.any(bad):
            return SubSuperReport(side, sigma, eps0, vt, delta, True, d, res, violations, warn)
        violations.append((delta, float(d[bad].min()), float(d[bad].max())))
        delta *= 0.5
        if not delta > sigma:
            break
    return SubSuperReport(side, sigma, eps0, vt, delta, False, np.empty(0), np.empty(0), violations, warn)


def _log_phi_spline(p: ProblemSpec, s_lo: float, s_hi: float, n: int = 300):
    """Cubic spline of ``log Phi`` against ``log s`` from ``n`` exact solves."""
    prof = get_profile(p.f, p.weight)
    s = np.geomspace(s_lo, s_hi, n)
    lp = np.log([prof.phi(float(v))[0] for v in s])
    return CubicSpline(np.log(s), lp)


def _point_at_distance(domain, d):
    """Coordinate of the point at distance ``d`` from the (outer) boundary."""
    d = np.asarray(d, dtype=float)
    if isinstance(domain, Interval):
        return domain.lo + d
    if isinstance(domain, Ball):
        return domain.R - d
    return domain.R1 - d


def sandwich_check(p: ProblemSpec, sol: SolutionGrid, eps0: float, sigma: float, delta: float):
    """``u_-(d) - w <= u(d) <= u_+(d) + w`` on ``(d_cut, delta)`` with a
    constant slack ``w`` measured at ``d = delta``."""
    f, K = p.f, p.weight
    tp, tm = theta_pm(f.rho, K.theta, eps0)
    d_cut = saturation_cut(sol)
    mesh = sol.mesh
    n = mesh.n
    dl, ul = mesh.d[: n + 1], sol.u[: n + 1]
    if mesh.radial and not mesh.boundary[0]:
        dl, ul = mesh.d[::-1], sol.u[::-1]
    sel = (dl > max(d_cut, sigma * 1.001)) & (dl <= delta)
    d = dl[sel]
    u = ul[sel]
    if len(d) == 0:
        raise ValidationError("no mesh nodes inside the sandwich range")
    log_phi = _log_phi_spline(p, float((d - sigma).min()), float((d + sigma).max()))
    L = f.profile.L
    up = np.asarray(L(tp * np.exp(log_phi(np.log(d - sigma)))), float)
    lo = np.asarray(L(tm * np.exp(log_phi(np.log(d + sigma)))), float)
    i = int(np.argmax(d))
    slack = max(0.0, u[i] - up[i], lo[i] - u[i])
    lower_ok = bool(np.all(lo - slack <= u + 1e-12))
    upper_ok = bool(np.all(u <= up + slack + 1e-12))
    return {"slack": slack, "lower_ok": lower_ok, "upper_ok": upper_ok, "n_nodes": int(len(d)),
            "d_range": [float(d.min()), float(d.max())], "verdict": lower_ok and upper_ok}


@dataclass
class UniquenessReport:
    discrepancy: float
    starts: list
    converged: dict


def uniqueness_probe(p: ProblemSpec, d_min: float = 0.1, **kw) -> UniquenessReport:
    """Run the continuation from three starting iterates and compare the
    interior values on ``{d >= d_min}``."""
    starts = ["profile", "constant", "overrelaxed"]
    sols = {}
    conv = {}
    for s in starts:
        res = solve_large(p, d_min=d_min, start=s, stop_on_convergence=False, **kw)
        sols[s] = res.solution
        conv[s] = res.converged
    mesh = sols["profile"].mesh
    comp = mesh.d >= d_min
    ref = sols["profile"].u[comp]
    disc = max(float(np.max(np.abs(sols[s].u[comp] - ref))) for s in starts)
    return UniquenessReport(disc, starts, conv)


def bieberbach_exact(x):
    """``log(2 pi^2 / sin^2(pi x))``: the large solution of ``u'' = e^u`` on (0, 1)."""
    x = np.asarray(x, dtype=float)
    return np.log(2.0 * math.pi ** 2 / np.sin(math.pi * x) ** 2)
