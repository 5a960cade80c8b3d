"""Stationary solutions of v'' + f(x, v) = 0 assembled from phase-plane pieces.

Every profile is glued from an explicit ``a cosh(x - c)`` (or general
``A e^x + B e^-x``) middle piece and outer pieces obtained by integrating
``v'' = -f(v)``. Outer pieces that end on a saddle, i.e. decay to ``1`` or ``0``,
are integrated *away* from the saddle: they start on the linearized manifold
at distance ``tail_eps`` and are shifted in x until they hit the junction
state. Beyond ``tail_eps`` the exponential tail is used.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import minimize_scalar

from .phase_plane import (
    bisect_root,
    critical_half_width,
    ell_minimum,
    spans,
    v1_of_a,
)
from .reaction import (
    DomainError,
    ModelParams,
    check_alpha,
    homoclinic_energy_gap,
    outer_energy_gap_to_one,
    outer_potential,
    outer_reaction,
    reaction_value,
    theta,
)

__all__ = [
    "ProfileKind",
    "StationaryProfile",
    "RegimeError",
    "IntegrationError",
    "MatchingError",
    "BarrierError",
    "GridMismatchError",
    "OrderingReport",
    "solve_a_big",
    "solve_a_small",
    "solve_a_ground",
    "build_profile",
    "build_compact_bump",
    "build_periodic",
    "build_barrier",
    "upper_solution_residual",
    "ode_residual",
    "check_ordering",
    "tail_log_slope",
    "write_profile_csv",
    "read_profile_csv",
    "uniform_grid",
    "RTOL",
    "ATOL",
    "TAIL_EPS",
]

RTOL = 1e-12
ATOL = 1e-15
TAIL_EPS = 1e-8
MATCH_TOL = 1e-8
_MAX_SPAN = 400.0


class RegimeError(DomainError):
    """The requested profile does not exist for this strip width."""


class IntegrationError(RuntimeError):
    """An outer piece never reached its junction state."""


class MatchingError(RuntimeError):
    """Value or slope jump at a junction exceeds the matching tolerance."""


class BarrierError(RuntimeError):
    """No admissible junction state was found for the barrier."""


class GridMismatchError(ValueError):
    pass


class ProfileKind(str, enum.Enum):
    BIG = "big"
    SMALL = "small"
    UPPER_SMALL = "upper_small"
    GROUND = "ground"
    COMPACT_BUMP = "compact_bump"
    PERIODIC = "periodic"
    BARRIER = "barrier"


def uniform_grid(x_min: float, x_max: float, h: float) -> np.ndarray:
    n = int(round((x_max - x_min) / h)) + 1
    return np.linspace(x_min, x_min + (n - 1) * h, n)


# --------------------------------------------------------------------------
# piecewise evaluation
# --------------------------------------------------------------------------

PieceFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class _Piece:
    lo: float
    hi: float
    fn: PieceFn
    ode: str  # "outer", "strip" or "const"


class _Piecewise:
    def __init__(self, pieces: Sequence[_Piece]):
        self.pieces = list(pieces)
        self.edges = np.array([pc.lo for pc in self.pieces[1:]])

    def locate(self, x: np.ndarray) -> np.ndarray:
        # right-continuous: a junction belongs to the piece on its right
        return np.searchsorted(self.edges, x, side="right")

    def __call__(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        v = np.empty_like(x)
        dv = np.empty_like(x)
        idx = self.locate(x)
        for k, pc in enumerate(self.pieces):
            m = idx == k
            if np.any(m):
                v[m], dv[m] = pc.fn(x[m])
        return v, dv

    def one_sided(self, k: int, x: float) -> tuple[float, float]:
        v, dv = self.pieces[k].fn(np.array([x]))
        return float(v[0]), float(dv[0])


@dataclass
class StationaryProfile:
    """A stationary profile sampled on a grid, with an exact evaluator attached."""

    kind: ProfileKind
    alpha: float
    params: ModelParams | None
    a: float
    center_shift: float
    x: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    meta: dict = field(default_factory=dict)
    _eval: _Piecewise | None = field(default=None, repr=False, compare=False)
    support: tuple[float, float] = (-math.inf, math.inf)

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)[0]

    def evaluate(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if self._eval is not None:
            return self._eval(x)
        spline = CubicHermiteSpline(self.x, self.v, self.dv)
        return spline(x), spline.derivative()(x)

    def derivative(self, x) -> np.ndarray:
        return self.evaluate(x)[1]

    @property
    def kinks(self) -> tuple[float, ...]:
        return tuple(self.meta.get("kinks", ()))


# --------------------------------------------------------------------------
# ODE helpers
# --------------------------------------------------------------------------

def _rhs(alpha: float):
    def rhs(_x, y):
        return (y[1], -outer_reaction(alpha, y[0]))

    return rhs


def _event(fn, direction: float):
    def ev(x, y):
        return fn(y)

    ev.terminal = True
    ev.direction = direction
    return ev


def _integrate(alpha, y0, span, fn, direction, what):
    sol = solve_ivp(
        _rhs(alpha), (0.0, span), y0, method="DOP853", rtol=RTOL, atol=ATOL,
        dense_output=True, events=_event(fn, direction),
    )
    if sol.status != 1 or len(sol.t_events[0]) == 0:
        raise IntegrationError(
            f"{what}: junction not reached within |x| <= {abs(span)} (start state {y0})"
        )
    return sol, float(sol.t_events[0][0]), sol.y_events[0][0]


def _heteroclinic_left(alpha: float, v_target: float, tail_eps: float):
    """Decreasing branch leaving (1, 0); returns evaluator on (-inf, x_hit] in local x.

    Local x = 0 is where ``1 - v = eps``.
    """
    eps = min(tail_eps, 0.5 * (1.0 - v_target))
    k = math.sqrt(1.0 - alpha)
    y0 = np.array([1.0 - eps, -math.sqrt(outer_energy_gap_to_one(alpha, 1.0 - eps))])
    sol, x_hit, y_hit = _integrate(
        alpha, y0, _MAX_SPAN, lambda y: y[0] - v_target, -1.0, "left heteroclinic piece"
    )
    dense = sol.sol

    def local(s: np.ndarray):
        s = np.asarray(s, dtype=float)
        v = np.empty_like(s)
        dv = np.empty_like(s)
        tail = s < 0.0
        if np.any(tail):
            e = eps * np.exp(k * s[tail])
            v[tail], dv[tail] = 1.0 - e, -k * e
        body = ~tail
        if np.any(body):
            y = dense(s[body])
            v[body], dv[body] = y[0], y[1]
        return v, dv

    return local, x_hit, y_hit, eps


def _homoclinic_right(alpha: float, v_target: float | None, ascending: bool, tail_eps: float):
    """Branch decaying into (0, 0), traced backwards from its tail.

    Local x = 0 is where ``v = eps``; the returned junction lies at negative
    local x. ``v_target=None`` stops at the peak ``v = theta``. With
    ``ascending`` the trace passes the peak and stops where v first returns
    to ``v_target`` on the rising side.
    """
    eps = min(tail_eps, 0.5 * v_target) if v_target else tail_eps
    k = math.sqrt(alpha)
    y0 = np.array([eps, -math.sqrt(homoclinic_energy_gap(alpha, eps))])
    if v_target is None or ascending:
        sol, x_peak, y_peak = _integrate(
            alpha, y0, -_MAX_SPAN, lambda y: y[1], 1.0, "right homoclinic piece (peak)"
        )
        y_peak = np.array([y_peak[0], 0.0])
        denses = [(x_peak, 0.0, sol.sol)]
        if v_target is None:
            x_hit, y_hit = x_peak, y_peak
        else:
            sol2 = solve_ivp(
                _rhs(alpha), (x_peak, x_peak - _MAX_SPAN), y_peak, method="DOP853",
                rtol=RTOL, atol=ATOL, dense_output=True,
                events=_event(lambda y: y[0] - v_target, -1.0),
            )
            if sol2.status != 1 or len(sol2.t_events[0]) == 0:
                raise IntegrationError("right homoclinic piece: rising junction not reached")
            x_hit, y_hit = float(sol2.t_events[0][0]), sol2.y_events[0][0]
            denses.insert(0, (x_hit, x_peak, sol2.sol))
    else:
        sol, x_hit, y_hit = _integrate(
            alpha, y0, -_MAX_SPAN, lambda y: y[0] - v_target, 1.0, "right homoclinic piece"
        )
        x_peak = None
        denses = [(x_hit, 0.0, sol.sol)]

    def local(s: np.ndarray):
        s = np.asarray(s, dtype=float)
        v = np.empty_like(s)
        dv = np.empty_like(s)
        tail = s > 0.0
        if np.any(tail):
            e = eps * np.exp(-k * s[tail])
            v[tail], dv[tail] = e, -k * e
        rest = ~tail
        for lo, hi, dense in denses:
            m = rest & (s >= lo) & (s <= hi)
            if np.any(m):
                y = dense(s[m])
                v[m], dv[m] = y[0], y[1]
                rest &= ~m
        return v, dv

    return local, x_hit, y_hit, x_peak, eps


def _cosh_piece(a: float, c: float) -> PieceFn:
    def fn(x):
        return a * np.cosh(x - c), a * np.sinh(x - c)

    return fn


def _check_match(where: str, left: tuple[float, float], right: tuple[float, float]):
    dv = abs(left[0] - right[0])
    dw = abs(left[1] - right[1])
    if dv >= MATCH_TOL or dw >= MATCH_TOL:
        raise MatchingError(f"junction at {where}: |dv|={dv:.3e}, |dv'|={dw:.3e}")
    return dv, dw


# --------------------------------------------------------------------------
# well ordinates
# --------------------------------------------------------------------------

def _ell(alpha: float, a: float) -> float:
    return spans(alpha, a).ell


def solve_a_big(p: ModelParams) -> float:
    """Unique a with R(a) = L."""
    alpha, L = p.alpha, p.half_width

    def big_span(a: float) -> float:
        return spans(alpha, a).big_span

    hi = 1.0 - 1e-15
    if big_span(hi) >= L:
        return hi
    lo = 0.5
    while big_span(lo) <= L:
        lo *= 0.5
        if lo < 1e-300:
            raise RegimeError(f"no well ordinate found for L={L!r}")
    return bisect_root(lambda a: L - big_span(a), lo, hi, ftol=1e-12)


def solve_a_small(p: ModelParams, branch: str = "lower") -> float:
    """Well ordinate a with ell(a) = 2L.

    ``branch="lower"`` picks the root below the minimiser of ell (the stable
    small profile, exists for ``L >= inf ell / 2``). ``branch="upper"`` picks the
    root in ``[a_min, theta]`` (exists for ``inf ell/2 <= L <= L*``; equals
    theta at ``L = L*``).
    """
    alpha, L = p.alpha, p.half_width
    th = theta(alpha)
    a_c, ell_min = ell_minimum(alpha)
    target = 2.0 * L
    if target < ell_min:
        raise RegimeError(
            f"no small profile: 2L={target!r} is below inf ell={ell_min!r}"
        )
    if target == ell_min:
        return a_c
    if branch == "lower":
        lo = a_c
        while _ell(alpha, lo) <= target:
            lo *= 0.5
            if lo < 1e-300:
                raise RegimeError(f"no small profile found for L={L!r}")
        return bisect_root(lambda a: target - _ell(alpha, a), lo, a_c, ftol=1e-12)
    if branch == "upper":
        ell_th = 2.0 * critical_half_width(alpha)
        if target == ell_th:
            return th
        if target > ell_th:
            raise RegimeError(
                f"no upper small profile: L={L!r} exceeds L*={0.5 * ell_th!r}"
            )
        return bisect_root(lambda a: _ell(alpha, a) - target, a_c, th, ftol=1e-12)
    raise ValueError(f"unknown branch {branch!r}")


def solve_a_ground(p: ModelParams) -> float:
    """Unique a in (0, theta) with R(a) + r(a) = 2L, for L > L*."""
    alpha, L = p.alpha, p.half_width
    Ls = critical_half_width(alpha)
    if not (L > Ls):
        raise RegimeError(f"no ground profile: L={L!r} <= L*={Ls!r}")
    th = theta(alpha)

    def span(a: float) -> float:
        st = spans(alpha, a)
        return st.big_span + st.small_span

    lo = 0.5 * th
    while span(lo) <= 2.0 * L:
        lo *= 0.5
    return bisect_root(lambda a: 2.0 * L - span(a), lo, th, ftol=1e-12)


# --------------------------------------------------------------------------
# profiles with limits 1 / 0 at infinity
# --------------------------------------------------------------------------

def _sample(prof_eval: _Piecewise, grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.asarray(grid.x if hasattr(grid, "x") else grid, dtype=float)
    v, dv = prof_eval(x)
    return x, v, dv


def build_profile(
    kind: ProfileKind | str,
    p: ModelParams,
    grid,
    tail_eps: float = TAIL_EPS,
) -> StationaryProfile:
    """Big, small, upper-small or ground profile sampled on ``grid``.

    ``grid`` is a Grid1D or an increasing array of abscissae.
    """
    kind = ProfileKind(kind)
    alpha, L = p.alpha, p.half_width
    if kind is ProfileKind.BIG:
        a = solve_a_big(p)
        c = 0.0
    elif kind is ProfileKind.SMALL:
        a = solve_a_small(p, "lower")
    elif kind is ProfileKind.UPPER_SMALL:
        a = solve_a_small(p, "upper")
    elif kind is ProfileKind.GROUND:
        a = solve_a_ground(p)
    else:
        raise ValueError(f"build_profile does not handle {kind.value!r}")
    st = spans(alpha, a)
    if kind in (ProfileKind.SMALL, ProfileKind.UPPER_SMALL):
        c = 0.5 * (st.big_span + st.small_span)
    elif kind is ProfileKind.GROUND:
        c = 0.5 * st.ell
    middle = _cosh_piece(a, c)

    # left piece: heteroclinic from 1 down to v(-L)
    vL, wL = middle(np.array([-L]))
    vL, wL = float(vL[0]), float(wL[0])
    left_local, s_hit, y_hit, eps_l = _heteroclinic_left(alpha, vL, tail_eps)
    shift_l = -L - s_hit
    match_left = _check_match("-L", (float(y_hit[0]), float(y_hit[1])), (vL, wL))

    def left(x, _f=left_local, _s=shift_l):
        return _f(x - _s)

    meta = {"kinks": [-L, L], "tail_eps": tail_eps}
    if kind is ProfileKind.BIG:
        def right(x):
            v, dv = left(-x)
            return v, -dv

        match_right = match_left
        meta["right_tail"] = "one"
    else:
        vR, wR = middle(np.array([L]))
        vR, wR = float(vR[0]), float(wR[0])
        if kind is ProfileKind.GROUND:
            r_local, s_hit_r, y_r, s_peak, _ = _homoclinic_right(alpha, vR, True, tail_eps)
        elif st.small_span == 0.0:
            r_local, s_hit_r, y_r, s_peak, _ = _homoclinic_right(alpha, None, False, tail_eps)
        else:
            r_local, s_hit_r, y_r, s_peak, _ = _homoclinic_right(alpha, vR, False, tail_eps)
        shift_r = L - s_hit_r
        match_right = _check_match("+L", (float(y_r[0]), float(y_r[1])), (vR, wR))

        def right(x, _f=r_local, _s=shift_r):
            return _f(x - _s)

        meta["right_tail"] = "zero"
        if kind is ProfileKind.GROUND:
            meta["x1"] = c
            meta["x2"] = s_peak + shift_r
    meta["match_left"] = match_left
    meta["match_right"] = match_right
    meta["tail_origin_left"] = shift_l
    if kind is not ProfileKind.BIG:
        meta["tail_origin_right"] = shift_r

    ev = _Piecewise([
        _Piece(-math.inf, -L, left, "outer"),
        _Piece(-L, L, middle, "strip"),
        _Piece(L, math.inf, right, "outer"),
    ])
    x, v, dv = _sample(ev, grid)
    return StationaryProfile(kind, alpha, p, a, c, x, v, dv, meta, ev)


# --------------------------------------------------------------------------
# compact bump and periodic orbits (bistable equation only)
# --------------------------------------------------------------------------

def build_compact_bump(alpha: float, a: float, grid=None) -> StationaryProfile:
    """Even bump with peak a in (theta, 1) and v(±x0) = 0."""
    alpha = check_alpha(alpha)
    th = theta(alpha)
    if not (th < a < 1.0):
        raise DomainError(f"bump peak must lie in (theta={th!r}, 1), got {a!r}")
    sol, x0, y0 = _integrate(
        alpha, np.array([a, 0.0]), _MAX_SPAN, lambda y: y[0], -1.0, "compact bump"
    )
    dense = sol.sol

    def half(x):
        x = np.asarray(x, dtype=float)
        s = np.clip(np.abs(x), 0.0, x0)
        y = dense(s)
        return y[0], np.sign(x) * y[1]

    ev = _Piecewise([_Piece(-x0, x0, half, "outer")])
    if grid is None:
        inner = np.linspace(-x0, x0, 2001)[1:-1]
    else:
        gx = np.asarray(grid.x if hasattr(grid, "x") else grid, dtype=float)
        inner = gx[(gx > -x0) & (gx < x0)]
    x = np.concatenate([[-x0], inner, [x0]])
    v, dv = ev(x)
    v[0] = v[-1] = 0.0
    meta = {"x0": x0, "slope_at_x0": float(y0[1])}
    prof = StationaryProfile(ProfileKind.COMPACT_BUMP, alpha, None, a, 0.0, x, v, dv,
                             meta, ev, support=(-x0, x0))
    return prof


def build_periodic(alpha: float, a: float, samples: int = 2001) -> StationaryProfile:
    """One period of the closed orbit through (a, 0), a in (0, alpha); starts at the minimum."""
    alpha = check_alpha(alpha)
    if not (0.0 < a < alpha):
        raise DomainError(f"periodic minimum must lie in (0, alpha={alpha!r}), got {a!r}")
    sol, half_T, y_top = _integrate(
        alpha, np.array([a, 0.0]), _MAX_SPAN, lambda y: y[1], -1.0, "periodic orbit"
    )
    period = 2.0 * half_T
    dense = sol.sol

    def fn(x):
        s = np.mod(np.asarray(x, dtype=float), period)
        back = s > half_T
        s = np.where(back, period - s, s)
        y = dense(s)
        return y[0], np.where(back, -y[1], y[1])

    ev = _Piecewise([_Piece(-math.inf, math.inf, fn, "outer")])
    x = np.linspace(0.0, period, samples)
    v, dv = ev(x)
    meta = {"period": period, "max": float(y_top[0]), "min": a,
            "energy": float(outer_potential(alpha, a))}
    return StationaryProfile(ProfileKind.PERIODIC, alpha, None, a, 0.0, x, v, dv, meta, ev)


def _periodic_min_for_energy(alpha: float, energy: float) -> float:
    # outer potential decreases on (0, alpha) from 0 to its minimum
    return bisect_root(lambda m: energy - outer_potential(alpha, m), 1e-300, alpha, ftol=1e-15)


# --------------------------------------------------------------------------
# barrier (weak upper solution)
# --------------------------------------------------------------------------

def _barrier_junction(alpha, L, delta, d):
    wD = -math.sqrt(delta * delta + outer_energy_gap_to_one(alpha, d))
    c2, s2 = math.cosh(2.0 * L), math.sinh(2.0 * L)
    vE = d * c2 + wD * s2
    wE = d * s2 + wD * c2
    energy = 0.5 * wE * wE + outer_potential(alpha, vE)
    return wD, vE, wE, energy


def _junction_admissible(alpha, vE, energy) -> bool:
    return 0.0 < vE < theta(alpha) and outer_potential(alpha, alpha) < energy < 0.0


def _assemble_barrier(p: ModelParams, delta: float, eps0: float, d: float):
    alpha, L = p.alpha, p.half_width
    wD, vE, wE, energy = _barrier_junction(alpha, L, delta, d)
    # left: energy delta^2/2 + F(1), traced leftwards from D until v = 1 + eps0
    top = 1.0 + eps0
    sol = solve_ivp(
        _rhs(alpha), (-L, -L - _MAX_SPAN), np.array([d, wD]), method="DOP853",
        rtol=RTOL, atol=ATOL, dense_output=True,
        events=_event(lambda y: y[0] - top, 1.0),
    )
    if sol.status != 1 or len(sol.t_events[0]) == 0:
        raise BarrierError(f"left piece from D=({d}, {wD}) never reached {top}")
    L_bar = -float(sol.t_events[0][0])
    w_corner = float(sol.y_events[0][0][1])
    left_dense = sol.sol

    def const(x):
        return np.full_like(x, top), np.zeros_like(x)

    def left(x):
        y = left_dense(x)
        return y[0], y[1]

    def middle(x):
        s = x + L
        return d * np.cosh(s) + wD * np.sinh(s), d * np.sinh(s) + wD * np.cosh(s)

    m = _periodic_min_for_energy(alpha, energy)
    per = build_periodic(alpha, m)
    T = per.meta["period"]
    # phase s0 in [0, T) with per(s0) = E
    half = 0.5 * T
    if wE >= 0.0:
        s0 = bisect_root(lambda s: float(per(s)[0]) - vE, 0.0, half, ftol=1e-14)
    else:
        s0 = bisect_root(lambda s: vE - float(per(s)[0]), half, T, ftol=1e-14)

    def right(x):
        return per.evaluate(x - L + s0)

    ev = _Piecewise([
        _Piece(-math.inf, -L_bar, const, "const"),
        _Piece(-L_bar, -L, left, "outer"),
        _Piece(-L, L, middle, "strip"),
        _Piece(L, math.inf, right, "outer"),
    ])
    info = dict(d=d, wD=wD, vE=vE, wE=wE, energy=energy, L_bar=L_bar,
                w_corner=w_corner, period=T, per_min=m, per_max=per.meta["max"], phase=s0)
    return ev, info


def _barrier_gap(
    ev: _Piecewise, small: StationaryProfile, lo: float, hi: float, refine: bool = False
) -> float:
    x = np.linspace(lo, hi, 4001)
    gap = ev(x)[0] - small(x)
    k = int(np.argmin(gap))
    if not refine:
        return float(gap[k])

    def g(s: float) -> float:
        return float(ev(np.array([s]))[0][0] - small(np.array([s]))[0])

    a, b = x[max(k - 1, 0)], x[min(k + 1, len(x) - 1)]
    res = minimize_scalar(g, bounds=(a, b), method="bounded", options={"xatol": 1e-12})
    return min(float(gap[k]), float(res.fun), g(a), g(b))


def build_barrier(
    p: ModelParams,
    delta: float = 1e-2,
    eps0: float = 5e-2,
    grid=None,
    small: StationaryProfile | None = None,
) -> StationaryProfile:
    """Continuous weak upper solution lying a uniform distance above the small profile.

    Pieces, left to right: the constant ``1 + eps0``; the outer orbit with
    energy ``delta^2/2 + F(1)``, decreasing through ``(1, -delta)``; a strip piece
    ``A e^x + B e^-x``; a periodic outer orbit inside the homoclinic loop. The
    free junction ordinate at ``x = -L`` is chosen to maximise the margin over
    the small profile.
    """
    alpha, L = p.alpha, p.half_width
    if not (delta > 0.0 and eps0 > 0.0):
        raise DomainError("delta and eps0 must be positive")
    if small is None:
        small = build_profile(ProfileKind.SMALL, p, np.array([0.0]))
    d_floor = float(small(np.array([-L]))[0])
    ds = np.linspace(d_floor, 1.0 + eps0, 801)
    ok = []
    for d in ds:
        _, vE, _, energy = _barrier_junction(alpha, L, delta, d)
        ok.append(_junction_admissible(alpha, vE, energy))
    ok = np.array(ok)
    if not ok.any():
        wD, vE, wE, energy = _barrier_junction(alpha, L, delta, ds[0])
        raise BarrierError(
            "strip piece cannot land inside the homoclinic loop; "
            f"attempted D=({ds[0]}, {wD}) -> E=({vE}, {wE}), energy {energy}"
        )
    idx = np.flatnonzero(ok)
    # longest admissible run
    runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    run = max(runs, key=len)
    d_lo = ds[max(run[0] - 1, 0)]
    d_hi = ds[min(run[-1] + 1, len(ds) - 1)]

    def neg_gap(d: float) -> float:
        _, vE, _, energy = _barrier_junction(alpha, L, delta, d)
        if not _junction_admissible(alpha, vE, energy):
            return 1.0
        ev, info = _assemble_barrier(p, delta, eps0, d)
        return -_barrier_gap(ev, small, -info["L_bar"] - 1.0, L + 2.0 * info["period"])

    res = minimize_scalar(neg_gap, bounds=(d_lo, d_hi), method="bounded",
                          options={"xatol": 1e-10})
    d_best = float(res.x)
    ev, info = _assemble_barrier(p, delta, eps0, d_best)
    gap = _barrier_gap(ev, small, -info["L_bar"] - 1.0, L + 2.0 * info["period"], refine=True)
    if not gap > 0.0:
        raise BarrierError(f"barrier does not clear the small profile (min gap {gap})")
    eps = min(gap / 3.0, eps0)

    vm, wm = ev.one_sided(2, -L)
    vl, wl = ev.one_sided(1, -L)
    vr, wr = ev.one_sided(3, L)
    ve, we = ev.one_sided(2, L)
    match = (_check_match("-L", (vl, wl), (vm, wm)), _check_match("+L", (ve, we), (vr, wr)))
    x_mid = np.linspace(-L, L, 2001)
    eps1 = min(float(np.min(ev(x_mid)[0])), info["per_min"])
    info.update(
        eps=eps, gap=gap, eps1=eps1, delta=delta, eps0=eps0,
        corner_jump=0.0 - info["w_corner"], match=match,
        kinks=[-info["L_bar"], -L, L],
        normalization="left piece is the decreasing branch through (1, -delta), "
                      "continued above 1 until it reaches 1 + eps0",
    )
    if grid is None:
        x = uniform_grid(-info["L_bar"] - 5.0, L + 40.0, 0.01)
    else:
        x = np.asarray(grid.x if hasattr(grid, "x") else grid, dtype=float)
    v, dv = ev(x)
    return StationaryProfile(ProfileKind.BARRIER, alpha, p, float("nan"), -L, x, v, dv,
                             info, ev)


def upper_solution_residual(profile: StationaryProfile, x: np.ndarray, eta: float = 1e-3):
    """-v'' - f(x, v) at points x, with v'' from a 5-point stencil on the exact piece.

    Stencils never straddle a junction; points closer than ``2 eta`` to a kink are skipped.
    """
    ev = profile._eval
    p = profile.params
    x = np.asarray(x, dtype=float)
    keep = np.ones_like(x, dtype=bool)
    for k in profile.kinks:
        keep &= np.abs(x - k) > 2.0 * eta
    x = x[keep]
    idx = ev.locate(x)
    out = np.empty_like(x)
    for k, pc in enumerate(ev.pieces):
        m = idx == k
        if not np.any(m):
            continue
        xs = x[m]
        w = [pc.fn(xs + j * eta)[1] for j in (-2, -1, 1, 2)]
        d2 = (w[0] - 8.0 * w[1] + 8.0 * w[2] - w[3]) / (12.0 * eta)
        v = pc.fn(xs)[0]
        out[m] = -d2 - reaction_value(p, xs, v)
    return x, out


# --------------------------------------------------------------------------
# verification helpers
# --------------------------------------------------------------------------

def ode_residual(profile: StationaryProfile, p: ModelParams) -> float:
    """sup |D2 v + f(x, v)| over interior nodes whose stencil avoids every kink."""
    x, v = profile.x, profile.v
    if len(x) < 3:
        raise ValueError("need at least three samples")
    h = np.diff(x)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0.0):
        raise GridMismatchError("ode_residual needs uniformly spaced samples")
    hh = float(np.mean(h))
    d2 = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / hh**2
    xi = x[1:-1]
    res = np.abs(d2 + reaction_value(p, xi, v[1:-1]))
    keep = np.ones_like(xi, dtype=bool)
    for k in profile.kinks:
        keep &= ~((x[:-2] <= k) & (x[2:] >= k))
    if not np.any(keep):
        return 0.0
    return float(np.max(res[keep]))


@dataclass(frozen=True)
class OrderingReport:
    ok: bool
    min_gap_lower: float
    min_gap_upper: float | None

    def __bool__(self) -> bool:
        return self.ok


def check_ordering(
    Vs: StationaryProfile,
    Vg: StationaryProfile | None,
    Vb: StationaryProfile,
) -> OrderingReport:
    """Strict ordering Vs < Vg < Vb (or Vs < Vb) at every common sample."""
    profiles = [Vs, Vg, Vb] if Vg is not None else [Vs, Vb]
    x0 = profiles[0].x
    for prof in profiles[1:]:
        if prof.x.shape != x0.shape or not np.array_equal(prof.x, x0):
            raise GridMismatchError("profiles are sampled on different grids")
    if Vg is None:
        g1 = float(np.min(Vb.v - Vs.v))
        return OrderingReport(g1 > 0.0, g1, None)
    g1 = float(np.min(Vg.v - Vs.v))
    g2 = float(np.min(Vb.v - Vg.v))
    return OrderingReport(g1 > 0.0 and g2 > 0.0, g1, g2)


def tail_log_slope(
    profile: StationaryProfile,
    side: str,
    decade: tuple[float, float] = (1e-7, 1e-6),
) -> float:
    """Fitted slope of log|deviation| against the outward distance |x|.

    Only samples whose deviation lies in ``decade`` enter the fit, so both
    tails give negative slopes. ``side="left"`` uses ``1 - v`` as x -> -inf;
    ``side="right"`` uses ``1 - v`` (big profile) or ``v`` (profiles decaying
    to 0) as x -> +inf.
    """
    lo_dev, hi_dev = decade
    L = profile.params.half_width if profile.params is not None else 0.0
    if side == "left":
        origin = profile.meta["tail_origin_left"]
        xs = np.linspace(origin, -L, 60001)
        dev = 1.0 - profile(xs)
    elif side == "right":
        if profile.meta.get("right_tail") == "one":
            origin = -profile.meta["tail_origin_left"]
            xs = np.linspace(L, origin, 60001)
            dev = 1.0 - profile(xs)
        else:
            origin = profile.meta["tail_origin_right"]
            xs = np.linspace(L, origin, 60001)
            dev = profile(xs)
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    m = (dev >= lo_dev) & (dev <= hi_dev)
    if m.sum() < 10:
        raise ValueError("too few samples inside the requested decade")
    slope, _ = np.polyfit(np.abs(xs[m]), np.log(dev[m]), 1)
    return float(slope)


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

def _fmt(v) -> str:
    return format(float(v), ".17g")


def write_profile_csv(profile: StationaryProfile, path) -> None:
    lines = [f"# kind={profile.kind.value}", f"# alpha={_fmt(profile.alpha)}"]
    if profile.params is not None:
        lines.append(f"# L={_fmt(profile.params.half_width)}")
    lines.append(f"# a={_fmt(profile.a)}")
    lines.append(f"# shift={_fmt(profile.center_shift)}")
    for key in ("x0", "x1", "x2", "period", "L_bar", "eps", "eps0", "delta"):
        if key in profile.meta:
            lines.append(f"# {key}={_fmt(profile.meta[key])}")
    lines.append("x,v")
    lines.extend(f"{_fmt(x)},{_fmt(v)}" for x, v in zip(profile.x, profile.v))
    Path(path).write_text("\n".join(lines) + "\n")


def read_profile_csv(path) -> tuple[dict, np.ndarray, np.ndarray]:
    meta: dict = {}
    xs, vs = [], []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = val
        elif line and line != "x,v":
            x, v = line.split(",")
            xs.append(float(x))
            vs.append(float(v))
    return meta, np.array(xs), np.array(vs)
