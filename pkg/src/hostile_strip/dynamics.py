"""Long-time classification of fronts crossing the strip and threshold location in the shift.

A run is labelled by the stationary profile its steady state matches on a
window around the strip:

* Spreading: the big profile (always present);
* Residue: the stable small profile (present once a blocked state exists);
* Transition: the unstable intermediate state, i.e. the ground profile for
  ``L > L*`` or the upper small profile for ``inf ell/2 < L <= L*``.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .pde import (
    Field,
    Grid1D,
    InitialData,
    SimConfig,
    _Stepper,
    evolve,
    make_initial,
    sup_distance,
)
from .phase_plane import blocking_half_width, critical_half_width
from .reaction import DomainError, ModelParams, theta
from .stationary import (
    ProfileKind,
    StationaryProfile,
    build_compact_bump,
    build_profile,
)

__all__ = [
    "Label",
    "Outcome",
    "Bracket",
    "ThresholdResult",
    "ShadowingResult",
    "SweepRow",
    "ProfileSet",
    "BracketError",
    "MonotonicityError",
    "profile_set",
    "simulation_grid",
    "classify",
    "label_field",
    "refine_upper",
    "check_monotone",
    "spreading_certificate",
    "find_thresholds",
    "ground_shadowing",
    "regime_sweep",
    "regime_of",
    "write_threshold_csv",
    "write_sweep_csv",
    "CLASSIFY_TOL",
]

CLASSIFY_TOL = 1e-3
DEFAULT_BRACKET = (-60.0, 60.0)
# distance between the outermost shift and the grid end
_SIGMA_MARGIN = 20.0


class BracketError(RuntimeError):
    """The bracket endpoints do not classify as Residue (low) and Spreading (high)."""


class MonotonicityError(RuntimeError):
    """Outcomes in the per-shift log are not ordered in the shift."""


class Label(str, enum.Enum):
    SPREADING = "Spreading"
    RESIDUE = "Residue"
    TRANSITION = "Transition"
    UNDETERMINED = "Undetermined"

    @property
    def rank(self) -> int:
        return {"Residue": 0, "Transition": 1, "Undetermined": 1, "Spreading": 2}[self.value]


@dataclass
class Outcome:
    label: Label
    distances: dict[str, float | None]
    steady: bool
    final_time: float
    certified: bool = False
    certified_time: float | None = None
    sigma: float | None = None

    def distance(self, key: str) -> float:
        d = self.distances.get(key)
        return math.nan if d is None else d


# --------------------------------------------------------------------------
# profiles on the simulation grid
# --------------------------------------------------------------------------

@dataclass
class ProfileSet:
    """Stationary states of one (alpha, L) sampled on one grid, keyed Vs / Vg / Vb."""

    params: ModelParams
    grid: Grid1D
    profiles: dict[str, StationaryProfile]
    transition_kind: ProfileKind | None

    def keys(self) -> list[str]:
        return [k for k in ("Vs", "Vg", "Vb") if k in self.profiles]


@lru_cache(maxsize=32)
def profile_set(p: ModelParams, grid: Grid1D) -> ProfileSet:
    Lc = blocking_half_width(p.alpha)
    Ls = critical_half_width(p.alpha)
    L = p.half_width
    prof = {"Vb": build_profile(ProfileKind.BIG, p, grid.x)}
    tkind = None
    if L >= Lc:
        prof["Vs"] = build_profile(ProfileKind.SMALL, p, grid.x)
        if L > Ls:
            tkind = ProfileKind.GROUND
        elif L > Lc:
            tkind = ProfileKind.UPPER_SMALL
        if tkind is not None:
            prof["Vg"] = build_profile(tkind, p, grid.x)
    return ProfileSet(p, grid, prof, tkind)


def simulation_grid(
    p: ModelParams,
    sigmas: Sequence[float] = (0.0,),
    h: float = 0.02,
    margin: float = 40.0,
) -> Grid1D:
    """Grid aligned with the strip, at least ``margin`` beyond it and 20 beyond every shift."""
    L = p.half_width
    lo, hi = min(sigmas), max(sigmas)
    left = max(margin, -lo - L + _SIGMA_MARGIN)
    right = max(margin, hi - L + _SIGMA_MARGIN)
    return Grid1D.around_strip(L, h=h, left=left, right=right)


def _default_window(grid: Grid1D) -> tuple[float, float]:
    w = min(20.0, grid.x_max - 10.0, -grid.x_min - 10.0)
    return (-w, w)


# --------------------------------------------------------------------------
# spreading certificate
# --------------------------------------------------------------------------

@dataclass
class _Bump:
    offsets: np.ndarray  # bump values at node offsets -K..K
    first_center: int  # smallest centre index whose support lies right of the strip


@lru_cache(maxsize=32)
def _bump_on_grid(alpha: float, L: float, grid: Grid1D, peak: float | None) -> _Bump:
    th = theta(alpha)
    a = 0.5 * (th + 1.0) if peak is None else peak
    bump = build_compact_bump(alpha, a)
    x0 = bump.meta["x0"]
    h = grid.h
    K = int(math.floor(x0 / h))
    offs = np.arange(-K, K + 1) * h
    vals = np.asarray(bump(offs), dtype=float)
    x = grid.x
    first = int(np.searchsorted(x, L + x0, side="right"))
    return _Bump(vals, first)


def spreading_certificate(
    fld: Field,
    p: ModelParams,
    peak: float | None = None,
    slack: float = 1e-6,
) -> bool:
    """True iff the field lies above a compact bump placed wholly right of the strip.

    The bump (peak ``(theta + 1)/2`` by default) is a stationary subsolution of
    the bistable equation, so domination forces spreading. ``slack`` absorbs
    the difference between the discrete and continuous problems.
    """
    bump = _bump_on_grid(p.alpha, p.half_width, fld.grid, peak)
    u = fld.values
    K = (len(bump.offsets) - 1) // 2
    if len(u) < 2 * K + 1:
        return False
    windows = sliding_window_view(u, 2 * K + 1)
    centers = np.arange(K, len(u) - K)
    ok = np.all(windows >= bump.offsets + slack, axis=1) & (centers >= bump.first_center)
    return bool(np.any(ok))


# --------------------------------------------------------------------------
# classification
# --------------------------------------------------------------------------

Certificate = Literal["off", "exit", "audit"]


def _margin_label(distances: dict[str, float | None], tol: float) -> Label:
    ranked = sorted((d, k) for k, d in distances.items() if d is not None)
    if not ranked:
        return Label.UNDETERMINED
    best_d, best_k = ranked[0]
    runner = ranked[1][0] if len(ranked) > 1 else math.inf
    if best_d < tol and runner > 2.0 * tol:
        return {"Vb": Label.SPREADING, "Vs": Label.RESIDUE, "Vg": Label.TRANSITION}[best_k]
    return Label.UNDETERMINED


def classify(
    p: ModelParams,
    data: InitialData,
    cfg: SimConfig | None = None,
    grid: Grid1D | None = None,
    classify_tol: float = CLASSIFY_TOL,
    window: tuple[float, float] | None = None,
    certificate: Certificate = "exit",
) -> Outcome:
    """Evolve ``data`` to steadiness and match the result against the stationary set.

    ``certificate="exit"`` stops as soon as the spreading certificate fires and
    returns a certified Spreading outcome. ``"audit"`` records the firing time
    but still runs to steadiness and labels by the margin rule.
    """
    cfg = cfg or SimConfig()
    grid = grid or simulation_grid(p, (data.sigma,))
    if data.family == "step" and not (grid.x_min < data.sigma < grid.x_max):
        raise DomainError(f"shift {data.sigma} lies outside the grid [{grid.x_min}, {grid.x_max}]")
    window = window or _default_window(grid)
    fld = make_initial(data, grid, p)
    cert = {"time": None}

    def observer(cur: Field) -> bool:
        if certificate != "off" and cert["time"] is None and spreading_certificate(cur, p):
            cert["time"] = cur.time
            return certificate == "exit"
        return False

    stepper = _Stepper(grid, p, cfg)
    final, steady = evolve(fld, p, cfg, observer=observer, stepper=stepper)
    out = label_field(p, final, steady, classify_tol, window)
    out.sigma = data.sigma
    if cert["time"] is not None:
        out.certified, out.certified_time = True, cert["time"]
        if certificate == "exit":
            out.label = Label.SPREADING
    return out


def label_field(
    p: ModelParams,
    fld: Field,
    steady: bool,
    classify_tol: float = CLASSIFY_TOL,
    window: tuple[float, float] | None = None,
) -> Outcome:
    """Margin-rule label of an already evolved field (Undetermined unless steady)."""
    window = window or _default_window(fld.grid)
    profiles = profile_set(p, fld.grid)
    distances: dict[str, float | None] = {k: None for k in ("Vs", "Vg", "Vb")}
    for key, prof in profiles.profiles.items():
        distances[key] = sup_distance(fld, prof, window)
    label = _margin_label(distances, classify_tol) if steady else Label.UNDETERMINED
    return Outcome(label, distances, steady, fld.time)


# --------------------------------------------------------------------------
# thresholds
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass
class ThresholdResult:
    sigma_lower: Bracket | None
    sigma_upper: Bracket | None
    log: list[Outcome] = field(default_factory=list)
    all_spreading: bool = False
    bracket: tuple[float, float] = DEFAULT_BRACKET

    def sorted_log(self) -> list[Outcome]:
        return sorted(self.log, key=lambda o: o.sigma)


def check_monotone(log: Sequence[Outcome]) -> None:
    """Raise if a higher shift has a lower outcome rank than a lower shift."""
    ordered = sorted(log, key=lambda o: o.sigma)
    best = -1
    best_sigma = None
    for o in ordered:
        r = o.label.rank
        if r < best:
            raise MonotonicityError(
                f"{o.label.value} at sigma={o.sigma!r} lies above rank {best} at sigma={best_sigma!r}"
            )
        if r > best:
            best, best_sigma = r, o.sigma
    # Residue strictly above Spreading is the only fatal pattern; Undetermined
    # shares the Transition rank.


class _Runner:
    def __init__(self, p, family, k, cfg, grid, classify_tol, certificate):
        self.p, self.family, self.k = p, family, k
        self.cfg, self.grid = cfg, grid
        self.tol, self.certificate = classify_tol, certificate
        self.log: list[Outcome] = []

    def __call__(self, sigma: float) -> Outcome:
        for o in self.log:
            if o.sigma == sigma:
                return o
        data = InitialData(self.family, float(sigma), self.k)
        o = classify(self.p, data, self.cfg, self.grid, self.tol, certificate=self.certificate)
        self.log.append(o)
        check_monotone(self.log)
        return o


def find_thresholds(
    p: ModelParams,
    family: str = "step",
    cfg: SimConfig | None = None,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    sigma_tol: float = 1e-4,
    k: float = 1.0,
    h: float = 0.02,
    classify_tol: float = CLASSIFY_TOL,
    certificate: Certificate = "exit",
    widen: bool = True,
) -> ThresholdResult:
    """Bisect for the last Residue shift and the first Spreading shift.

    Both searches share one outcome log; every classification tightens
    whichever bracket it falls into.
    """
    cfg = cfg or SimConfig()
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise DomainError(f"bracket must satisfy lo < hi, got {bracket}")
    if not sigma_tol > 0.0:
        raise DomainError("sigma_tol must be positive")
    attempts = [(lo, hi)]
    if widen:
        c, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        attempts.append((c - 2.0 * half, c + 2.0 * half))
    for a_lo, a_hi in attempts:
        grid = simulation_grid(p, (a_lo, a_hi), h=h)
        run = _Runner(p, family, k, cfg, grid, classify_tol, certificate)
        o_lo, o_hi = run(a_lo), run(a_hi)
        if o_lo.label is Label.RESIDUE and o_hi.label is Label.SPREADING:
            break
    else:
        if o_lo.label is Label.SPREADING and o_hi.label is Label.SPREADING:
            return ThresholdResult(None, None, run.log, all_spreading=True, bracket=(a_lo, a_hi))
        raise BracketError(
            f"bracket [{a_lo}, {a_hi}] classifies as {o_lo.label.value} / {o_hi.label.value}; "
            "need Residue below and Spreading above"
        )

    def lower_bracket() -> Bracket:
        res = [o.sigma for o in run.log if o.label is Label.RESIDUE]
        non = [o.sigma for o in run.log if o.label is not Label.RESIDUE]
        return Bracket(max(res), min(s for s in non if s > max(res)))

    def upper_bracket() -> Bracket:
        spr = [o.sigma for o in run.log if o.label is Label.SPREADING]
        non = [o.sigma for o in run.log if o.label is not Label.SPREADING]
        return Bracket(max(s for s in non if s < min(spr)), min(spr))

    for which in (lower_bracket, upper_bracket):
        br = which()
        while br.width >= sigma_tol:
            mid = br.mid
            if mid <= br.lo or mid >= br.hi:
                break
            run(mid)
            br = which()
    return ThresholdResult(lower_bracket(), upper_bracket(), run.log, bracket=(a_lo, a_hi))


def refine_upper(
    p: ModelParams,
    result: ThresholdResult,
    sigma_tol: float,
    family: str = "step",
    cfg: SimConfig | None = None,
    k: float = 1.0,
    h: float = 0.02,
    classify_tol: float = CLASSIFY_TOL,
    certificate: Certificate = "exit",
) -> ThresholdResult:
    """Continue bisecting the Spreading threshold of an existing result to ``sigma_tol``."""
    cfg = cfg or SimConfig()
    if result.sigma_upper is None:
        raise DomainError("result has no Spreading threshold to refine")
    grid = simulation_grid(p, result.bracket, h=h)
    run = _Runner(p, family, k, cfg, grid, classify_tol, certificate)
    run.log = list(result.log)
    br = result.sigma_upper
    while br.width >= sigma_tol:
        mid = br.mid
        o = run(mid)
        br = Bracket(br.lo, mid) if o.label is Label.SPREADING else Bracket(mid, br.hi)
    return ThresholdResult(result.sigma_lower, br, run.log, bracket=result.bracket)


# --------------------------------------------------------------------------
# shadowing of the unstable state
# --------------------------------------------------------------------------

@dataclass
class ShadowingResult:
    min_distance: float
    time_of_min: float
    trace: list[tuple[float, float]]
    steady: bool


def ground_shadowing(
    p: ModelParams,
    cfg: SimConfig | None,
    sigma: float,
    family: str = "step",
    k: float = 1.0,
    grid: Grid1D | None = None,
    window: tuple[float, float] | None = None,
) -> ShadowingResult:
    """Record the window distance to the transition state once per unit time."""
    cfg = cfg or SimConfig()
    if not p.half_width > critical_half_width(p.alpha):
        raise DomainError("ground profile requires L > L*")
    grid = grid or simulation_grid(p, (sigma,))
    window = window or _default_window(grid)
    target = profile_set(p, grid).profiles["Vg"]
    trace: list[tuple[float, float]] = []

    def observer(cur: Field) -> bool:
        trace.append((cur.time, sup_distance(cur, target, window)))
        return False

    fld = make_initial(InitialData(family, float(sigma), k), grid, p)
    _, steady = evolve(fld, p, cfg, observer=observer)
    ds = np.array([d for _, d in trace])
    i = int(np.argmin(ds))
    return ShadowingResult(float(ds[i]), trace[i][0], trace, steady)


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

def regime_of(alpha: float, L: float, rel: float = 1e-12) -> str:
    Ls = critical_half_width(alpha)
    if abs(L - Ls) <= rel * Ls:
        return "dichotomy"
    return "spreading" if L < Ls else "trichotomy"


@dataclass
class SweepRow:
    L: float
    Lstar: float
    regime: str
    sigma_lower: Bracket | None
    sigma_upper: Bracket | None
    error: str | None = None


def _sweep_one(args) -> SweepRow:
    alpha, L, family, cfg, bracket, sigma_tol, k, h = args
    Ls = critical_half_width(alpha)
    regime = regime_of(alpha, L)
    try:
        p = ModelParams(alpha, L)
        res = find_thresholds(p, family, cfg, bracket, sigma_tol, k, h)
        return SweepRow(L, Ls, regime, res.sigma_lower, res.sigma_upper)
    except Exception as exc:  # captured per row
        return SweepRow(L, Ls, regime, None, None, f"{type(exc).__name__}: {exc}")


def regime_sweep(
    alpha: float,
    L_values: Sequence[float],
    family: str = "step",
    cfg: SimConfig | None = None,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    sigma_tol: float = 1e-4,
    k: float = 1.0,
    h: float = 0.02,
    workers: int = 1,
) -> list[SweepRow]:
    """Per half-width: regime relative to L* and the computed threshold brackets.

    Brackets come from the simulations, so half-widths between ``inf ell/2`` and
    L* report thresholds even though their regime column says ``spreading``.
    """
    cfg = cfg or SimConfig()
    jobs = [(alpha, float(L), family, cfg, bracket, sigma_tol, k, h) for L in L_values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_one, jobs))
    return [_sweep_one(j) for j in jobs]


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

def _num(v) -> str:
    return "nan" if v is None else format(float(v), ".17g")


def write_threshold_csv(result: ThresholdResult, path) -> None:
    lines = ["sigma,outcome,dist_Vs,dist_Vg,dist_Vb,final_t"]
    for o in result.sorted_log():
        lines.append(",".join([
            _num(o.sigma), o.label.value, _num(o.distances.get("Vs")),
            _num(o.distances.get("Vg")), _num(o.distances.get("Vb")), _num(o.final_time),
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    lines = ["L,Lstar,regime,sigma_lower_lo,sigma_lower_hi,sigma_upper_lo,sigma_upper_hi"]
    for r in rows:
        lo = r.sigma_lower
        up = r.sigma_upper
        lines.append(",".join([
            _num(r.L), _num(r.Lstar), r.regime,
            _num(lo.lo if lo else None), _num(lo.hi if lo else None),
            _num(up.lo if up else None), _num(up.hi if up else None),
        ]))
    Path(path).write_text("\n".join(lines) + "\n")
