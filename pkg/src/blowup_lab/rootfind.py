"""Bracketing and safeguarded Newton iteration for monotone scalar equations."""
from __future__ import annotations

import math

from .errors import NumericalError


def expand_bracket(g, z0: float, step: float = 1.0, max_expansions: int = 200,
                   lo_limit: float = -math.inf, hi_limit: float = math.inf):
    """Find ``(a, b)`` with ``g(a)`` and ``g(b)`` of opposite sign.

    Expands geometrically in both directions from ``z0``; the search never
    leaves ``[lo_limit, hi_limit]``. Returns ``(a, b, g(a), g(b))``.
    """
    history = []
    g0 = g(z0)
    history.append((z0, g0))
    if g0 == 0.0:
        return z0, z0, g0, g0
    a, ga = z0, g0
    b, gb = z0, g0
    for k in range(max_expansions):
        d = step * 2.0 ** k
        na, nb = max(z0 - d, lo_limit), min(z0 + d, hi_limit)
        if na < a:
            fa = g(na)
            history.append((na, fa))
            if math.copysign(1.0, fa) != math.copysign(1.0, g0):
                return na, a, fa, ga
            a, ga = na, fa
        if nb > b:
            fb = g(nb)
            history.append((nb, fb))
            if math.copysign(1.0, fb) != math.copysign(1.0, g0):
                return b, nb, gb, fb
            b, gb = nb, fb
        if na <= lo_limit and nb >= hi_limit:
            break
    raise NumericalError(f"bracketing failed after {max_expansions} expansions from z0={z0:g}", history)


def safeguarded_newton(g, dg, a: float, b: float, ga: float | None = None, gb: float | None = None,
                       x0: float | None = None, xtol: float = 1e-14, maxiter: int = 200):
    """Root of ``g`` in ``[a, b]`` by Newton's method with bisection fallback.

    ``xtol`` is an absolute tolerance on the iterate (callers work in log
    variables, where this is a relative tolerance on the original scale).
    """
    ga = g(a) if ga is None else ga
    gb = g(b) if gb is None else gb
    if ga == 0.0:
        return a, 0
    if gb == 0.0:
        return b, 0
    if math.copysign(1.0, ga) == math.copysign(1.0, gb):
        raise NumericalError(f"no sign change on [{a:g}, {b:g}]", [(a, ga), (b, gb)])
    x = 0.5 * (a + b) if x0 is None or not (a < x0 < b) else x0
    history = []
    for it in range(1, maxiter + 1):
        gx = g(x)
        history.append((x, gx))
        if gx == 0.0:
            return x, it
        if math.copysign(1.0, gx) == math.copysign(1.0, ga):
            a, ga = x, gx
        else:
            b, gb = x, gx
        d = dg(x)
        step_ok = d != 0.0 and math.isfinite(d)
        xn = x - gx / d if step_ok else math.nan
        if not (a < xn < b):
            xn = 0.5 * (a + b)
        if abs(xn - x) <= xtol * max(1.0, abs(x)) or (b - a) <= xtol * max(1.0, abs(x)):
            return xn, it
        x = xn
    raise NumericalError(f"Newton iteration did not converge in {maxiter} steps", history)
