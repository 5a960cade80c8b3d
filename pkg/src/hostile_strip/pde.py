"""IMEX finite-difference solver for u_t = u_xx + f(x, u) on a truncated line.

Diffusion is implicit (centred second difference, zero-flux ends), the reaction
is explicit. With ``dt * Lip(f) <= 1`` the update is monotone, so ordered data
stay ordered and the discrete maximum principle holds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Literal

import numpy as np
from numba import njit

from .reaction import DomainError, ModelParams, outer_reaction_prime

__all__ = [
    "Grid1D",
    "Field",
    "InitialData",
    "SimConfig",
    "SimulationError",
    "make_initial",
    "step",
    "evolve",
    "sup_distance",
    "reaction_lipschitz",
    "SnapshotRecorder",
    "write_snapshots",
    "write_manifest",
]


class SimulationError(RuntimeError):
    """Non-finite values or a violated discrete maximum principle."""


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self) -> None:
        if int(self.n) < 3:
            raise DomainError(f"grid needs at least 3 nodes, got {self.n!r}")
        if not (self.x_min < self.x_max):
            raise DomainError(f"x_min={self.x_min!r} must be below x_max={self.x_max!r}")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.n)

    @classmethod
    def around_strip(
        cls,
        half_width: float,
        h: float = 0.02,
        left: float = 40.0,
        right: float = 40.0,
    ) -> "Grid1D":
        """Uniform grid whose cell faces fall exactly on ``x = ±L``.

        The spacing is shrunk to ``2L/m`` for the integer ``m`` closest to
        ``2L/h`` so that the nodal strip occupies exactly ``2L``. The grid
        reaches at least ``left`` / ``right`` beyond the strip edges.
        """
        if not (h > 0.0):
            raise DomainError(f"spacing must be positive, got {h!r}")
        L = float(half_width)
        m = max(1, int(round(2.0 * L / h)))
        hh = 2.0 * L / m
        j_lo = -int(math.ceil(left / hh + 0.5))
        j_hi = m - 1 + int(math.ceil(right / hh + 0.5))
        x_min = -L + (j_lo + 0.5) * hh
        x_max = -L + (j_hi + 0.5) * hh
        return cls(x_min, x_max, j_hi - j_lo + 1)

    def check_covers(self, p: ModelParams, margin: float = 0.0) -> None:
        L = p.half_width
        if not (self.x_min < -L - margin and self.x_max > L + margin):
            raise DomainError(
                f"grid [{self.x_min}, {self.x_max}] does not cover the strip "
                f"[-{L}, {L}] with margin {margin}"
            )
        x = self.x
        for edge in (-L, L):
            if np.min(np.abs(x - edge)) > self.h:
                raise DomainError(f"no node within h of the strip edge {edge}")

    def window_mask(self, window: tuple[float, float]) -> np.ndarray:
        lo, hi = window
        if not (self.x_min <= lo < hi <= self.x_max):
            raise DomainError(f"window {window} is not inside [{self.x_min}, {self.x_max}]")
        x = self.x
        return (x >= lo) & (x <= hi)


@dataclass
class Field:
    grid: Grid1D
    values: np.ndarray
    time: float = 0.0

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.time)


Family = Literal["step", "logistic"]


@dataclass(frozen=True)
class InitialData:
    """Decreasing front ``phi(x - sigma)``: a Heaviside step or a logistic profile."""

    family: Family = "step"
    sigma: float = 0.0
    k: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in ("step", "logistic"):
            raise DomainError(f"unknown initial-data family {self.family!r}")
        if self.family == "logistic" and not (self.k > 0.0):
            raise DomainError(f"logistic steepness must be positive, got {self.k!r}")
        if not math.isfinite(self.sigma):
            raise DomainError(f"shift must be finite, got {self.sigma!r}")

    def check_rates(self, alpha: float) -> None:
        """Reject a logistic steepness equal to either linearized tail rate."""
        if self.family != "logistic":
            return
        for rate in (math.sqrt(alpha), math.sqrt(1.0 - alpha)):
            if abs(self.k - rate) <= 1e-12 * rate:
                raise DomainError(
                    f"logistic steepness k={self.k!r} coincides with the tail rate {rate!r}"
                )

    def shifted(self, sigma: float) -> "InitialData":
        return replace(self, sigma=float(sigma))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family == "step":
            return np.where(x < self.sigma, 1.0, 0.0)
        z = self.k * (x - self.sigma)
        # a single rounded expression keeps the family monotone in sigma;
        # overflow of exp only sends the value to 0
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(z))


def reaction_lipschitz(alpha: float, upper: float = 1.05) -> float:
    """Lipschitz bound in u of f(x, .) on [0, upper]."""
    candidates = [1.0, abs(outer_reaction_prime(alpha, 0.0)),
                  abs(outer_reaction_prime(alpha, upper))]
    vertex = (1.0 + alpha) / 3.0
    if 0.0 <= vertex <= upper:
        candidates.append(abs(outer_reaction_prime(alpha, vertex)))
    return max(candidates)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-2
    t_max: float = 2000.0
    steady_tol: float = 1e-7
    snapshot_every: float = 0.0
    reaction: bool = True

    def __post_init__(self) -> None:
        if not (self.dt > 0.0):
            raise DomainError(f"dt must be positive, got {self.dt!r}")
        if not (self.t_max > 0.0):
            raise DomainError(f"t_max must be positive, got {self.t_max!r}")
        if not (self.steady_tol > 0.0):
            raise DomainError(f"steady_tol must be positive, got {self.steady_tol!r}")
        if self.snapshot_every < 0.0:
            raise DomainError("snapshot_every must be non-negative")

    def check_stability(self, alpha: float, upper: float = 1.05) -> None:
        lip = reaction_lipschitz(alpha, upper)
        if self.reaction and self.dt * lip > 1.0:
            raise DomainError(
                f"dt={self.dt!r} exceeds the monotonicity bound 1/Lip(f)={1.0 / lip!r}"
            )

    @property
    def steps_per_unit(self) -> int:
        return max(1, int(round(1.0 / self.dt)))


def make_initial(
    data: InitialData,
    grid: Grid1D,
    p: ModelParams | None = None,
    resolve_shift: bool = True,
) -> Field:
    """Sample the initial front on the grid.

    With ``resolve_shift`` a Step is cell-averaged: the node whose cell
    ``[x - h/2, x + h/2]`` contains ``sigma`` gets the covered fraction. The data
    then depend continuously and monotonically on ``sigma``, so thresholds in
    ``sigma`` can be resolved below the grid spacing. Every other node keeps
    the pointwise value.
    """
    if p is not None:
        data.check_rates(p.alpha)
    x = grid.x
    if data.family == "step" and resolve_shift:
        h = grid.h
        values = np.clip((data.sigma - (x - 0.5 * h)) / h, 0.0, 1.0)
    else:
        values = data(x).astype(float)
    return Field(grid, values, 0.0)


@njit(cache=True)
def _factor(n, r):
    # Thomas factors for (I - r * D2) with reflecting ends.
    sub = np.full(n, -r)
    sup = np.full(n, -r)
    sup[0] = -2.0 * r
    sub[n - 1] = -2.0 * r
    diag = 1.0 + 2.0 * r
    cprime = np.empty(n)
    inv_den = np.empty(n)
    inv_den[0] = 1.0 / diag
    cprime[0] = sup[0] * inv_den[0]
    for i in range(1, n):
        den = diag - sub[i] * cprime[i - 1]
        inv_den[i] = 1.0 / den
        cprime[i] = sup[i] * inv_den[i]
    return sub, cprime, inv_den


@njit(cache=True)
def _advance(u, nsteps, dt, r, alpha, strip, react, sub, cprime, inv_den):
    # Increment form (I - dt D2) du = dt (D2 u + f(u)); algebraically the
    # same update, but roundoff scales with du instead of u.
    n = u.shape[0]
    d = np.empty(n)
    for _ in range(nsteps):
        d[0] = 2.0 * r * (u[1] - u[0])
        d[n - 1] = 2.0 * r * (u[n - 2] - u[n - 1])
        for i in range(1, n - 1):
            d[i] = r * (u[i - 1] - 2.0 * u[i] + u[i + 1])
        if react:
            for i in range(n):
                ui = u[i]
                if strip[i]:
                    d[i] -= dt * ui
                else:
                    d[i] += dt * ui * (ui - alpha) * (1.0 - ui)
        d[0] = d[0] * inv_den[0]
        for i in range(1, n):
            d[i] = (d[i] - sub[i] * d[i - 1]) * inv_den[i]
        for i in range(n - 2, -1, -1):
            d[i] = d[i] - cprime[i] * d[i + 1]
        for i in range(n):
            u[i] += d[i]
    return u


class _Stepper:
    """Holds the factored implicit operator for one (grid, params, dt)."""

    def __init__(self, grid: Grid1D, p: ModelParams, cfg: SimConfig):
        cfg.check_stability(p.alpha)
        self.grid, self.p, self.cfg = grid, p, cfg
        self.strip = p.in_strip(grid.x)
        self.r = cfg.dt / grid.h**2
        self.sub, self.cprime, self.inv_den = _factor(grid.n, self.r)
        if not np.all(np.isfinite(self.inv_den)):
            raise SimulationError("singular implicit diffusion operator")

    def advance(self, u: np.ndarray, nsteps: int) -> np.ndarray:
        return _advance(u, nsteps, self.cfg.dt, self.r, self.p.alpha, self.strip,
                        self.cfg.reaction, self.sub, self.cprime, self.inv_den)


def _check_field(u: np.ndarray, upper: float, t: float) -> None:
    if not np.all(np.isfinite(u)):
        raise SimulationError(f"non-finite values at t={t}")
    lo, hi = float(u.min()), float(u.max())
    if lo < -1e-12 or hi > upper + 1e-12:
        raise SimulationError(
            f"maximum principle violated at t={t}: range [{lo}, {hi}], bound {upper}"
        )


def step(fld: Field, p: ModelParams, cfg: SimConfig) -> Field:
    """One IMEX step; returns a new Field."""
    st = _Stepper(fld.grid, p, cfg)
    u = st.advance(fld.values.copy(), 1)
    _check_field(u, max(1.0, float(fld.values.max())), fld.time + cfg.dt)
    return Field(fld.grid, u, fld.time + cfg.dt)


Observer = Callable[[Field], bool | None]


def evolve(
    fld: Field,
    p: ModelParams,
    cfg: SimConfig,
    observer: Observer | None = None,
    stepper: _Stepper | None = None,
) -> tuple[Field, bool]:
    """March until the unit-time sup-norm increment drops below ``steady_tol``.

    ``observer`` is called on the current field after every unit of time (and
    once at the start); returning True stops the run early with steady=False.
    """
    st = stepper if stepper is not None else _Stepper(fld.grid, p, cfg)
    chunk = cfg.steps_per_unit
    tau = chunk * cfg.dt
    u = fld.values.astype(float, copy=True)
    upper = max(1.0, float(u.max()))
    t0 = fld.time
    count = 0
    cur = Field(fld.grid, u, t0)
    if observer is not None and observer(cur):
        return Field(fld.grid, u.copy(), t0), False
    n_total = int(math.ceil((cfg.t_max - t0) / cfg.dt - 1e-9))
    while count < n_total:
        k = min(chunk, n_total - count)
        prev = u.copy()
        st.advance(u, k)
        count += k
        t = t0 + count * cfg.dt
        _check_field(u, upper, t)
        cur = Field(fld.grid, u, t)
        if observer is not None and observer(cur):
            return Field(fld.grid, u.copy(), t), False
        if k == chunk and float(np.max(np.abs(u - prev))) / tau < cfg.steady_tol:
            return Field(fld.grid, u.copy(), t), True
    return Field(fld.grid, u.copy(), t0 + count * cfg.dt), False


def sup_distance(fld: Field, profile, window: tuple[float, float]) -> float:
    """max |u - v| over grid nodes in ``window``; ``profile`` is evaluated on the nodes."""
    mask = fld.grid.window_mask(window)
    x = fld.grid.x[mask]
    lo, hi = profile.support
    if window[0] < lo or window[1] > hi:
        raise DomainError(f"window {window} exceeds the profile support {profile.support}")
    return float(np.max(np.abs(fld.values[mask] - profile(x))))


class SnapshotRecorder:
    """Observer that stores copies of the field every ``every`` time units.

    ``every = 0`` records nothing; callers add the final field themselves.
    """

    def __init__(self, every: float):
        self.every = float(every)
        self.frames: list[Field] = []
        self._next = 0.0

    def __call__(self, fld: Field) -> bool:
        if self.every > 0.0 and fld.time >= self._next - 1e-9:
            self.frames.append(fld.copy())
            self._next = fld.time + self.every
        return False


def _g(v: float) -> str:
    return format(float(v), ".17g")


def write_snapshots(frames: list[Field], path) -> None:
    """Long-format ``t,x,u`` CSV."""
    with open(path, "w") as fh:
        fh.write("t,x,u\n")
        for fr in frames:
            t = _g(fr.time)
            for x, u in zip(fr.grid.x, fr.values):
                fh.write(f"{t},{_g(x)},{_g(u)}\n")


def write_manifest(items: dict, path) -> None:
    """Flat ``key=value`` text, one entry per line, in insertion order."""
    lines = []
    for key, val in items.items():
        if isinstance(val, float):
            val = _g(val)
        lines.append(f"{key}={val}")
    Path(path).write_text("\n".join(lines) + "\n")
