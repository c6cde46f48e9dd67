"""One-dimensional and radially symmetric domains.

Points are given by a scalar coordinate: ``x`` for intervals, the radius
``r = |x|`` for balls and annuli (vector inputs are reduced to their norm).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError


def _coord(x, radial: bool):
    x = np.asarray(x, dtype=float)
    if radial and x.ndim >= 1 and x.shape[-1] > 1 and x.ndim == 2:
        return np.linalg.norm(x, axis=-1)
    return x


@dataclass(frozen=True)
class Interval:
    l: float
    r: float
    kind: str = "interval"
    N: int = 1

    def __post_init__(self):
        if not self.r > self.l:
            raise ValidationError("interval needs l < r")

    @property
    def radial(self):
        return False

    @property
    def lo(self):
        return self.l

    @property
    def hi(self):
        return self.r

    @property
    def center(self):
        return 0.5 * (self.l + self.r)

    @property
    def diam(self):
        return self.r - self.l

    @property
    def max_distance(self):
        return 0.5 * (self.r - self.l)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (x > self.l) & (x < self.r)

    def distance(self, x):
        """Distance to the blow-up boundary."""
        x = _coord(x, False)
        if np.any((x < self.l) | (x > self.r)):
            raise DomainError("point outside the domain")
        return np.minimum(x - self.l, self.r - x)

    def laplacian_of_distance(self, d, side="outer"):
        return np.zeros_like(np.asarray(d, dtype=float))


@dataclass(frozen=True)
class Ball:
    N: int
    R: float
    kind: str = "ball"

    def __post_init__(self):
        if self.N < 1 or not self.R > 0:
            raise ValidationError("ball needs N >= 1 and R > 0")

    @property
    def radial(self):
        return True

    @property
    def lo(self):
        return 0.0

    @property
    def hi(self):
        return self.R

    @property
    def center(self):
        return 0.0

    @property
    def diam(self):
        return 2.0 * self.R

    @property
    def max_distance(self):
        return self.R

    def contains(self, r):
        r = _coord(r, True)
        return (r >= 0) & (r < self.R)

    def distance(self, r):
        r = _coord(r, True)
        if np.any((r < 0) | (r > self.R)):
            raise DomainError("point outside the domain")
        return self.R - r

    def laplacian_of_distance(self, d, side="outer"):
        r = self.R - np.asarray(d, dtype=float)
        return -(self.N - 1) / r


@dataclass(frozen=True)
class Annulus:
    N: int
    R0: float
    R1: float
    kind: str = "annulus"

    def __post_init__(self):
        if self.N < 1 or not (0 < self.R0 < self.R1):
            raise ValidationError("annulus needs N >= 1 and 0 < R0 < R1")

    @property
    def radial(self):
        return True

    @property
    def lo(self):
        return self.R0

    @property
    def hi(self):
        return self.R1

    @property
    def center(self):
        return 0.5 * (self.R0 + self.R1)

    @property
    def diam(self):
        return self.R1 - self.R0

    @property
    def max_distance(self):
        return 0.5 * (self.R1 - self.R0)

    def contains(self, r):
        r = _coord(r, True)
        return (r > self.R0) & (r < self.R1)

    def distance(self, r):
        r = _coord(r, True)
        if np.any((r < self.R0) | (r > self.R1)):
            raise DomainError("point outside the domain")
        return np.minimum(r - self.R0, self.R1 - r)

    def laplacian_of_distance(self, d, side="outer"):
        d = np.asarray(d, dtype=float)
        if side == "outer":
            return -(self.N - 1) / (self.R1 - d)
        return (self.N - 1) / (self.R0 + d)


def make_domain(kind: str, N: int = 1, bounds=(0.0, 1.0)):
    if kind == "interval":
        return Interval(float(bounds[0]), float(bounds[1]))
    if kind == "ball":
        R = bounds[-1] if isinstance(bounds, (list, tuple)) else bounds
        return Ball(int(N), float(R))
    if kind == "annulus":
        return Annulus(int(N), float(bounds[0]), float(bounds[1]))
    raise ValidationError(f"unknown domain kind {kind!r}")


@dataclass(frozen=True)
class Omega0:
    """Interior zero set of the weight: a centred subinterval, concentric
    ball, or concentric sub-annulus, given by its coordinate range."""

    lo: float
    hi: float

    @property
    def diam(self):
        return self.hi - self.lo

    def distance(self, x):
        x = np.asarray(x, dtype=float)
        return np.maximum(0.0, np.maximum(self.lo - x, x - self.hi))

    def inside(self, x):
        x = np.asarray(x, dtype=float)
        return (x >= self.lo) & (x <= self.hi)

    def as_domain(self, parent):
        """The eigenvalue region for ``lambda_inf_1``."""
        if isinstance(parent, Interval):
            return Interval(self.lo, self.hi)
        if self.lo <= 0.0:
            return Ball(parent.N, self.hi)
        return Annulus(parent.N, self.lo, self.hi)

    def validate(self, parent):
        if not (self.hi > self.lo):
            raise ValidationError("omega0 must be nonempty with lo < hi")
        if isinstance(parent, Ball):
            ok = self.lo <= 0.0 and self.hi < parent.R
        else:
            ok = parent.lo < self.lo and self.hi < parent.hi
        if not ok:
            raise ValidationError("closure of omega0 must lie inside the domain")
        if isinstance(parent, Interval) and not math.isclose(0.5 * (self.lo + self.hi), parent.center, abs_tol=1e-12):
            raise ValidationError("omega0 must be centred in the interval")
