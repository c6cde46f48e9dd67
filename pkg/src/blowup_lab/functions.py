"""Composable scalar functions with analytic derivatives.

A :class:`ScalarFunction` wraps either a sympy expression in the single
variable :data:`U` (evaluation via ``lambdify``, derivatives by symbolic
differentiation) or an opaque callable (derivatives by central finite
differences, flagged through ``analytic = False``).
"""
from __future__ import annotations

import math

import numpy as np
import scipy.special
import sympy as sp

from .errors import DomainError

U = sp.Symbol("u", positive=True)

_EPS = np.finfo(float).eps
_FD_SCALE = _EPS ** (1.0 / 3.0)


def _expi(x):
    # scipy returns nan at +inf
    x = np.asarray(x, dtype=float)
    return np.where(np.isposinf(x), np.inf, scipy.special.expi(x))


_MODULES = [{"Ei": _expi}, "numpy", "scipy"]


def log_m(x, m: int = 1):
    """Iterated logarithm ``log(log(...log(x)))`` (``m`` times), symbolic."""
    for _ in range(m):
        x = sp.log(x)
    return x


def exp_m(x, m: int = 1):
    for _ in range(m):
        x = sp.exp(x)
    return x


def log_m_domain(m: int) -> float:
    """Smallest ``x`` with ``log_m(x)`` defined and positive: ``exp_{m-1}(1)``."""
    x = 1.0
    for _ in range(m - 1):
        x = math.exp(x)
    return x


def iterated_log(x, m: int = 1):
    """Guarded numeric ``log_m``; raises instead of producing NaN."""
    y = np.asarray(x, dtype=float)
    for k in range(m):
        if np.any(y <= 0.0):
            raise DomainError(f"log_{m} undefined: level-{k} argument {y.min():.6g} <= 0")
        y = np.log(y)
    return y if y.ndim else float(y)


class ScalarFunction:
    """A real function of one variable with evaluation and derivatives.

    Parameters
    ----------
    expr : sympy expression, callable, or number
        Symbolic expressions must be in the variable :data:`U`.
    domain_lo : float
        Evaluation below this threshold raises :class:`DomainError`.
    name : str, optional
    """

    def __init__(self, expr, domain_lo: float = -math.inf, name: str | None = None):
        self.domain_lo = float(domain_lo)
        if callable(expr) and not isinstance(expr, sp.Basic):
            self.expr = None
            self._fn = expr
        else:
            self.expr = sp.sympify(expr)
            free = self.expr.free_symbols - {U}
            if free:
                raise ValueError(f"unexpected symbols {free}; use blowup_lab.functions.U")
            self._fn = sp.lambdify(U, self.expr, modules=_MODULES)
        self.name = name or (str(self.expr) if self.expr is not None else "<callable>")
        self._derivs: dict[int, ScalarFunction] = {}

    @property
    def analytic(self) -> bool:
        return self.expr is not None

    def __repr__(self):
        return f"ScalarFunction({self.name})"

    def __call__(self, u):
        arr = np.asarray(u, dtype=float)
        if np.any(arr < self.domain_lo):
            raise DomainError(f"{self.name}: argument below domain threshold {self.domain_lo:g}")
        with np.errstate(all="ignore"):
            out = self._fn(arr)
        out = np.broadcast_to(np.asarray(out, dtype=float), arr.shape)
        if np.any(np.isnan(out) & ~np.isnan(arr)):
            raise DomainError(f"{self.name}: evaluation produced NaN")
        return float(out) if out.ndim == 0 else np.array(out)

    def deriv(self, order: int = 1) -> ScalarFunction:
        """The ``order``-th derivative (analytic when possible)."""
        if order == 0:
            return self
        if order in self._derivs:
            return self._derivs[order]
        if self.analytic:
            d = ScalarFunction(sp.diff(self.expr, U, order), self.domain_lo, name=f"d{order}[{self.name}]")
        else:
            prev = self.deriv(order - 1)
            d = ScalarFunction(_central_difference(prev), self.domain_lo, name=f"fd{order}[{self.name}]")
        self._derivs[order] = d
        return d

    def fd_deriv(self, u):
        """Central finite difference with step ``max(|u|, 1) * eps**(1/3)``."""
        return _central_difference(self)(u)

    def log(self) -> ScalarFunction:
        """``log`` of the function, simplified symbolically when possible.

        Used for overflow-safe ratio tests on rapidly varying functions.
        """
        if self.analytic:
            expr = sp.expand_log(sp.log(self.expr), force=True)
            return ScalarFunction(expr, self.domain_lo, name=f"log[{self.name}]")
        fn = self._fn
        return ScalarFunction(lambda u: np.log(fn(u)), self.domain_lo, name=f"log[{self.name}]")

    def compose(self, inner: ScalarFunction, domain_lo: float | None = None) -> ScalarFunction:
        """``self(inner(u))``."""
        lo = inner.domain_lo if domain_lo is None else domain_lo
        if self.analytic and inner.analytic:
            return ScalarFunction(self.expr.subs(U, inner.expr), lo, name=f"{self.name}o{inner.name}")
        outer_fn, inner_fn = self, inner
        return ScalarFunction(lambda u: outer_fn._fn(inner_fn._fn(u)), lo, name=f"{self.name}o{inner.name}")

    def _binary(self, other, op, sym):
        if not isinstance(other, ScalarFunction):
            other = ScalarFunction(sp.sympify(other))
        lo = max(self.domain_lo, other.domain_lo)
        if self.analytic and other.analytic:
            return ScalarFunction(op(self.expr, other.expr), lo, name=f"({self.name}{sym}{other.name})")
        a, b = self._fn, other._fn
        return ScalarFunction(lambda u: op(np.asarray(a(u), float), np.asarray(b(u), float)), lo)

    def __add__(self, other):
        return self._binary(other, lambda x, y: x + y, "+")

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda x, y: x - y, "-")

    def __mul__(self, other):
        return self._binary(other, lambda x, y: x * y, "*")

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, lambda x, y: x / y, "/")

    def __pow__(self, p):
        if self.analytic:
            return ScalarFunction(self.expr ** p, self.domain_lo, name=f"({self.name})^{p}")
        fn = self._fn
        return ScalarFunction(lambda u: np.asarray(fn(u), float) ** p, self.domain_lo)


def _central_difference(fun: ScalarFunction):
    def d(u):
        u = np.asarray(u, dtype=float)
        h = np.maximum(np.abs(u), 1.0) * _FD_SCALE
        lo = fun.domain_lo
        # one-sided near the domain edge
        left = np.where(u - h < lo, u, u - h)
        right = u + h
        with np.errstate(all="ignore"):
            return (np.asarray(fun._fn(right), float) - np.asarray(fun._fn(left), float)) / (right - left)

    return d


def sf(expr, domain_lo: float = -math.inf, name: str | None = None) -> ScalarFunction:
    """Shorthand constructor."""
    return ScalarFunction(expr, domain_lo, name)


def self_test_derivative(fun: ScalarFunction, points) -> float:
    """Max relative gap between analytic and finite-difference derivative."""
    pts = np.asarray(points, dtype=float)
    a = np.asarray(fun.deriv(1)(pts), dtype=float)
    fd = np.asarray(fun.fd_deriv(pts), dtype=float)
    return float(np.max(np.abs(a - fd) / np.maximum(1.0, np.abs(a))))
