"""Intersections of the strip hyperbolas with the outer heteroclinic and homoclinic orbits.

Inside the strip every trajectory through ``(a, 0)`` is ``a cosh(x)``, i.e. the
hyperbola ``w^2 = v^2 - a^2``. It meets the heteroclinic orbit into ``(1, 0)``
at ``v1(a)`` and, for ``a <= theta``, the homoclinic loop at ``v2(a)``. The
x-lengths ``R = arccosh(v1/a)``, ``r = arccosh(v2/a)`` and ``ell = R - r`` set
which strip widths admit which stationary profiles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .reaction import (
    DomainError,
    check_alpha,
    homoclinic_energy_gap,
    outer_energy_gap_to_one,
    theta,
)

__all__ = [
    "BracketError",
    "SpanTable",
    "bisect_root",
    "v1_residual",
    "v2_residual",
    "v1_of_a",
    "v2_of_a",
    "spans",
    "critical_half_width",
    "span_curve",
    "log_a_grid",
    "ell_minimum",
    "blocking_half_width",
    "DEFAULT_A_MIN",
    "ROOT_TOL",
]

ROOT_TOL = 1e-12
DEFAULT_A_MIN = 1e-4


class BracketError(RuntimeError):
    """The residual does not change sign on the supplied bracket."""


def bisect_root(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    ftol: float = ROOT_TOL,
    max_iter: int = 400,
) -> float:
    """Bisection for an increasing residual with ``fn(lo) < 0 < fn(hi)``.

    Stops once ``|fn(mid)| < ftol`` or the bracket can no longer be split in
    floating point; in the latter case the endpoint with smaller residual wins.
    """
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if not (f_lo < 0.0 < f_hi):
        raise BracketError(
            f"no sign change on [{lo!r}, {hi!r}]: f(lo)={f_lo!r}, f(hi)={f_hi!r}"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = fn(mid)
        if abs(f_mid) < ftol:
            return mid
        if f_mid < 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return lo if abs(f_lo) <= abs(f_hi) else hi


def v1_residual(alpha: float, a: float, v: float) -> float:
    """v^2 - a^2 - 2 * int_v^1 f; increasing in v on (0, 1)."""
    return v * v - a * a - outer_energy_gap_to_one(alpha, v)


def v2_residual(alpha: float, a: float, v: float) -> float:
    """v^2 - a^2 + 2 * int_0^v f; increasing in v on (0, 1)."""
    return v * v - a * a - homoclinic_energy_gap(alpha, v)


def _check_a(a: float) -> float:
    a = float(a)
    if not (0.0 < a < 1.0):
        raise DomainError(f"well ordinate a must lie in (0, 1), got {a!r}")
    return a


def v1_of_a(alpha: float, a: float) -> float:
    alpha = check_alpha(alpha)
    a = _check_a(a)
    return bisect_root(lambda v: v1_residual(alpha, a, v), a, 1.0, ftol=0.0)


def v2_of_a(alpha: float, a: float) -> float:
    alpha = check_alpha(alpha)
    a = _check_a(a)
    th = theta(alpha)
    if a > th:
        raise DomainError(
            f"a={a!r} exceeds theta={th!r}: the strip hyperbola misses the homoclinic loop"
        )
    if a == th:
        return th
    return bisect_root(lambda v: v2_residual(alpha, a, v), a, th, ftol=0.0)


def _arccosh_ratio(v: float, a: float) -> float:
    return math.log((v + math.sqrt(max(v * v - a * a, 0.0))) / a)


@dataclass(frozen=True)
class SpanTable:
    a: float
    v1: float | None
    v2: float | None
    big_span: float | None
    small_span: float | None
    ell: float | None

    @property
    def R(self) -> float | None:
        return self.big_span

    @property
    def r(self) -> float | None:
        return self.small_span

    def as_row(self) -> tuple:
        return (self.a, self.v1, self.v2, self.big_span, self.small_span, self.ell)


def spans(alpha: float, a: float) -> SpanTable:
    alpha = check_alpha(alpha)
    a = _check_a(a)
    v1 = v1_of_a(alpha, a)
    R = _arccosh_ratio(v1, a)
    if a <= theta(alpha):
        v2 = v2_of_a(alpha, a)
        r = _arccosh_ratio(v2, a)
        return SpanTable(a, v1, v2, R, r, R - r)
    return SpanTable(a, v1, None, R, None, None)


def critical_half_width(alpha: float) -> float:
    """Half of ell at a = theta, where r vanishes and ell = R."""
    st = spans(alpha, theta(alpha))
    return 0.5 * st.ell


def log_a_grid(alpha: float, points: int, a_min: float = DEFAULT_A_MIN) -> np.ndarray:
    """Log-spaced well ordinates on [a_min, theta] ending exactly at theta."""
    th = theta(alpha)
    if points < 2:
        raise DomainError("need at least two grid points")
    if not (0.0 < a_min < th):
        raise DomainError(f"a_min must lie in (0, theta={th!r}), got {a_min!r}")
    grid = np.geomspace(a_min, th, points)
    grid[-1] = th
    return grid


def span_curve(alpha: float, a_grid: Sequence[float]) -> list[SpanTable]:
    alpha = check_alpha(alpha)
    th = theta(alpha)
    a_sorted = sorted(float(a) for a in a_grid)
    if a_sorted and (a_sorted[0] <= 0.0 or a_sorted[-1] > th):
        raise DomainError(f"a-grid must lie inside (0, theta={th!r}]")
    return [spans(alpha, a) for a in a_sorted]


def ell_minimum(alpha: float, a_min: float = DEFAULT_A_MIN) -> tuple[float, float]:
    """Location and value of the minimum of ell over (0, theta].

    ``r`` behaves like ``sqrt(theta - a)`` near the tangency at ``a = theta``,
    so ell turns upward there and its infimum is interior.
    """
    alpha = check_alpha(alpha)
    th = theta(alpha)
    grid = log_a_grid(alpha, 400, a_min)
    vals = np.array([spans(alpha, a).ell for a in grid])
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    if k == len(grid) - 1:
        return th, float(vals[-1])
    res = minimize_scalar(
        lambda a: spans(alpha, a).ell,
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x), float(res.fun)


def blocking_half_width(alpha: float) -> float:
    """Smallest half-width for which a small (blocked) profile exists: inf ell / 2."""
    return 0.5 * ell_minimum(alpha)[1]
