"""Heterogeneous reaction term: cubic bistable outside the strip, linear death inside."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "ModelParams",
    "reaction_value",
    "outer_reaction",
    "outer_reaction_prime",
    "outer_potential",
    "outer_energy_gap_to_one",
    "homoclinic_energy_gap",
    "theta",
    "theta_quadratic",
    "check_alpha",
]


class DomainError(ValueError):
    """A parameter lies outside the range where the model is defined."""


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 0.5) or not math.isfinite(alpha):
        raise DomainError(f"alpha must lie in (0, 1/2), got {alpha!r}")
    return alpha


@dataclass(frozen=True)
class ModelParams:
    """Bistable threshold ``alpha`` and strip half-width ``half_width``."""

    alpha: float
    half_width: float

    def __post_init__(self) -> None:
        check_alpha(self.alpha)
        L = float(self.half_width)
        if not (L > 0.0) or not math.isfinite(L):
            raise DomainError(f"half_width must be positive, got {self.half_width!r}")

    @property
    def L(self) -> float:
        return float(self.half_width)

    def in_strip(self, x):
        """True where the death term applies (open strip ``|x| < L``)."""
        return np.abs(x) < self.half_width

    def replace(self, **changes) -> "ModelParams":
        data = {"alpha": self.alpha, "half_width": self.half_width}
        data.update(changes)
        return ModelParams(**data)


def outer_reaction(alpha: float, u):
    """u (u - alpha) (1 - u)."""
    return u * (u - alpha) * (1.0 - u)


def outer_reaction_prime(alpha: float, u):
    return -3.0 * u * u + 2.0 * (1.0 + alpha) * u - alpha


def reaction_value(p: ModelParams, x, u):
    """f(x, u); ``x = ±L`` belongs to the bistable region."""
    inside = p.in_strip(x)
    outer = outer_reaction(p.alpha, u)
    if np.ndim(inside) == 0 and np.ndim(u) == 0:
        return float(-u) if inside else float(outer)
    return np.where(inside, -np.asarray(u, dtype=float), outer)


def outer_potential(alpha: float, u):
    """Primitive of the cubic vanishing at zero: -u^4/4 + (1+a) u^3/3 - a u^2/2."""
    return u * u * (-0.25 * u * u + (1.0 + alpha) * u / 3.0 - 0.5 * alpha)


def outer_energy_gap_to_one(alpha: float, u):
    """2 * integral of the cubic over [u, 1], factored around u = 1.

    Written as ``T^2 (c0 + c1 T + c2 T^2)`` with ``T = 1 - u`` so that it keeps
    full relative precision as ``u -> 1``.
    """
    t = 1.0 - u
    return t * t * ((1.0 - alpha) - 2.0 * (2.0 - alpha) * t / 3.0 + 0.5 * t * t)


def homoclinic_energy_gap(alpha: float, u):
    """-2 * integral of the cubic over [0, u], factored around u = 0."""
    return u * u * (alpha - 2.0 * (1.0 + alpha) * u / 3.0 + 0.5 * u * u)


def _theta_closed_form(alpha: float) -> float:
    # 16(a+1)^2 - 72a == 8(1-2a)(2-a); the smaller root is taken in
    # rationalized form so that neither a -> 0 nor a -> 1/2 cancels.
    disc = 8.0 * (1.0 - 2.0 * alpha) * (2.0 - alpha)
    return 12.0 * alpha / (4.0 * (alpha + 1.0) + math.sqrt(max(disc, 0.0)))


def theta(alpha: float) -> float:
    """Positive zero of the outer potential inside (alpha, 1).

    Equals ``(4(a+1) - sqrt(16(a+1)^2 - 72a)) / 6``.
    """
    return _theta_closed_form(check_alpha(alpha))


def theta_quadratic(alpha: float) -> float:
    """Smaller root of 3 t^2 - 4 (1 + alpha) t + 6 alpha = 0 via numpy.roots."""
    roots = np.roots([3.0, -4.0 * (1.0 + alpha), 6.0 * alpha])
    roots = np.sort(np.real(roots[np.abs(np.imag(roots)) < 1e-12]))
    return float(roots[0])
