"""Adaptive Gauss-Kronrod quadrature on panels, with tail closure for
improper integrals over ``[a, inf)``.

Panels are processed as arrays: one vectorised integrand call per sweep.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, DomainError

# Kronrod 15 nodes on [-1, 1] (positive half, centre last) and weights;
# Gauss 7 weights at the shared nodes.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
WEIGHTS_K = np.concatenate([_WK[:-1], _WK[::-1]])
WEIGHTS_G = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes
_g = np.concatenate([_WG[:-1], _WG[::-1]])
WEIGHTS_G[1::2] = _g


def gk15(fn, a, b):
    """Kronrod-15 estimate and ``|K15 - G7|`` for each panel ``[a_i, b_i]``."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    with np.errstate(all="ignore"):
        y = np.asarray(fn(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(y)):
        raise DomainError("integrand not finite on a quadrature panel")
    k = half * (y @ WEIGHTS_K)
    g = half * (y @ WEIGHTS_G)
    scale = np.abs(half) * (np.abs(y) @ WEIGHTS_K)
    return k, np.abs(k - g), scale


def integrate_panels(fn, edges, rtol: float = 1e-12, atol: float = 0.0, max_sweeps: int = 40,
                     max_active: int = 1 << 14):
    """Integrate ``fn`` over consecutive panels given by ``edges``.

    Returns per-panel integrals (length ``len(edges) - 1``) and the total
    error estimate. Panels are bisected adaptively; sub-results are summed
    back into their parent panel. Refinement stops early once more than
    ``max_active`` panels are pending (the error estimate then says so).
    """
    edges = np.asarray(edges, dtype=float)
    owner = np.arange(len(edges) - 1)
    a, b = edges[:-1].copy(), edges[1:].copy()
    out = np.zeros(len(edges) - 1)
    err_total = 0.0
    for _ in range(max_sweeps):
        k, e, scale = gk15(fn, a, b)
        floor = 50.0 * np.finfo(float).eps * scale
        done = (e <= np.maximum(rtol * scale, floor)) | (e <= atol / max(len(a), 1))
        np.add.at(out, owner[done], k[done])
        err_total += float(np.sum(e[done]))
        if np.all(done):
            return out, err_total
        a, b, owner = a[~done], b[~done], owner[~done]
        if 2 * len(a) > max_active:
            break
        m = 0.5 * (a + b)
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        owner = np.concatenate([owner, owner])
    k, e, _ = gk15(fn, a, b)
    np.add.at(out, owner, k)
    return out, err_total + float(np.sum(e))


def quad(fn, a: float, b: float, rtol: float = 1e-12, atol: float = 0.0, n_panels: int = 1):
    """Definite integral over ``[a, b]`` (``b`` may be below ``a``)."""
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    edges = np.linspace(a, b, n_panels + 1)
    vals, _ = integrate_panels(fn, edges, rtol, atol)
    return sign * float(np.sum(vals))


@dataclass
class ImproperResult:
    value: float
    body: float
    tail: float
    tail_extrapolated: float
    cutoff: float
    panels: np.ndarray = field(repr=False)
    warnings: list = field(default_factory=list)


def improper_integral(fn, a: float, rtol: float = 1e-10, tail=None, first_width: float | None = None,
                      max_panels: int = 200, min_panels: int = 8, tail_check: float = 1e-6,
                      batch: int = 16) -> ImproperResult:
    """``int_a^inf fn`` on dyadic panels ``a + w (2^k - 1)`` plus a tail closure.

    ``tail(X)``, if given, is an analytic closure for ``int_X^inf fn``;
    otherwise the last two panels are fitted by a geometric (power-law)
    sequence. Both closures are computed; disagreement larger than
    ``tail_check`` relative to the total is recorded in ``warnings``.
    """
    w = float(first_width) if first_width is not None else (abs(a) if a != 0 else 1.0)
    panels = np.empty(0)
    k0 = 0
    while True:
        ks = np.arange(k0, k0 + batch + 1)
        edges = a + w * (2.0 ** ks - 1.0)
        vals, _ = integrate_panels(fn, edges, rtol=rtol * 1e-2)
        panels = np.concatenate([panels, vals])
        k0 += batch
        n = len(panels)
        body = float(np.sum(panels))
        cutoff = a + w * (2.0 ** n - 1.0)
        extrap = _geometric_tail(panels)
        closure = float(tail(cutoff)) if tail is not None else extrap
        if closure is None:
            raise DivergenceError("integrand does not decay: panel integrals not shrinking")
        total = body + closure
        if n >= min_panels and abs(closure) <= rtol * 1e-2 * abs(total):
            break
        if n >= min_panels and extrap is not None and abs(extrap) <= rtol * 1e-2 * abs(total):
            break
        if n >= max_panels:
            break
    warnings = []
    if extrap is None:
        extrap = math.nan
    if tail is not None and abs(closure - extrap) > tail_check * abs(total):
        warnings.append(
            f"tail closure {closure:.3e} disagrees with panel extrapolation {extrap:.3e} at cutoff {cutoff:.3e}"
        )
    if tail is None and abs(closure) > rtol * abs(total):
        warnings.append(f"tail closure {closure:.3e} exceeds tolerance at cutoff {cutoff:.3e}")
    return ImproperResult(total, body, closure, extrap, cutoff, panels, warnings)


def _geometric_tail(panels):
    """Sum of the geometric continuation of the last two panel integrals."""
    p1, p2 = panels[-2], panels[-1]
    if p2 == 0.0:
        return 0.0
    if p1 == 0.0 or np.sign(p1) != np.sign(p2):
        return None
    r = p2 / p1
    if r >= 1.0:
        return None
    return float(p2 * r / (1.0 - r))
