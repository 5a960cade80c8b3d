"""Command-line entry point: ``hostile-strip <subcommand> [flags]``.

Every flag may also come from a ``key=value`` config file (``--config``);
flags given on the command line win. Output files go to ``--out`` /
``--out-dir``, defaulting to ``$HOSTILE_STRIP_OUT`` or the working directory.

Exit codes: 0 success, 2 domain error, 3 numerical failure, 4 undetermined
classification.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import math
import os
import sys
from pathlib import Path
from typing import Sequence

from scipy.integrate import quad
from scipy.optimize import brentq

from . import dynamics, pde, phase_plane, stationary
from .reaction import DomainError, ModelParams, check_alpha, theta

OUT_ENV = "HOSTILE_STRIP_OUT"
EXIT_OK, EXIT_DOMAIN, EXIT_NUMERIC, EXIT_UNDETERMINED = 0, 2, 3, 4
RESIDUAL_GATE = 1e-3

NUMERIC_ERRORS = (
    stationary.IntegrationError,
    stationary.MatchingError,
    stationary.BarrierError,
    pde.SimulationError,
    dynamics.BracketError,
    dynamics.MonotonicityError,
    phase_plane.BracketError,
    ArithmeticError,
)


class NumericalFailure(RuntimeError):
    pass


def _g(v) -> str:
    return format(float(v), ".17g")


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

def read_config(path) -> dict[str, str]:
    """Flat ``key=value`` lines; ``#`` starts a comment; dashes and underscores are equivalent."""
    out: dict[str, str] = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{n}: expected key=value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _resolve(args: argparse.Namespace, defaults: dict) -> argparse.Namespace:
    """Fill unset flags from the config file, then from the documented defaults."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    for key, (default, conv) in defaults.items():
        if getattr(args, key, None) is not None:
            continue
        if key in cfg:
            try:
                setattr(args, key, conv(cfg[key]))
            except ValueError as exc:
                raise DomainError(f"config key {key}: {exc}") from None
        else:
            setattr(args, key, default)
    return args


def _floats(text: str) -> list[float]:
    return [float(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def _pair(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise DomainError(f"expected two comma-separated numbers, got {text!r}")
    return vals[0], vals[1]


def _out_dir(args) -> Path:
    d = Path(args.out_dir or os.environ.get(OUT_ENV, "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _big_span_quadrature(alpha: float, a: float) -> float:
    """x-length from the cosh minimum to v1 as the integral of dv / sqrt(v^2 - a^2).

    The endpoint singularity at v = a is carried by an algebraic quadrature
    weight, and v1 comes from brentq, so nothing is shared with the closed form.
    """
    v1 = brentq(lambda v: phase_plane.v1_residual(alpha, a, v), a, 1.0, xtol=1e-15, rtol=1e-15)
    val, _ = quad(lambda v: 1.0 / math.sqrt(v + a), a, v1, weight="alg", wvar=(-0.5, 0.0),
                  epsabs=1e-14, epsrel=1e-13)
    return val


def cmd_critical_width(args) -> int:
    alpha = check_alpha(args.alpha)
    th = theta(alpha)
    Ls = phase_plane.critical_half_width(alpha)
    Ls_quad = 0.5 * _big_span_quadrature(alpha, th)
    grid = phase_plane.log_a_grid(alpha, args.points)
    ells = [phase_plane.spans(alpha, a).ell for a in grid]
    grid_inf = 0.5 * min(ells)
    a_c, ell_min = phase_plane.ell_minimum(alpha)
    rel = abs(Ls - Ls_quad) / Ls
    lines = [
        f"alpha={_g(alpha)}",
        f"theta={_g(th)}",
        f"Lstar={_g(Ls)}",
        f"Lstar_quadrature={_g(Ls_quad)}",
        f"routes_rel_diff={_g(rel)}",
        f"grid_infimum_half_ell={_g(grid_inf)}",
        f"grid_infimum_matches={str(abs(grid_inf - Ls) <= 1e-6 * Ls).lower()}",
        f"ell_argmin={_g(a_c)}",
        f"blocking_half_width={_g(0.5 * ell_min)}",
    ]
    print("\n".join(lines))
    if rel >= 1e-6:
        raise NumericalFailure(f"L* routes disagree: relative difference {rel}")
    return EXIT_OK


def cmd_ell_curve(args) -> int:
    alpha = check_alpha(args.alpha)
    grid = phase_plane.log_a_grid(alpha, args.points, args.a_min)
    rows = ["a,v1,v2,R,r,ell"]
    for st in phase_plane.span_curve(alpha, grid):
        rows.append(",".join(_g(v) for v in st.as_row()))
    _write_or_print("\n".join(rows) + "\n", args.out)
    return EXIT_OK


def cmd_stationary(args) -> int:
    p = ModelParams(args.alpha, args.L)
    kind = stationary.ProfileKind(args.kind)
    x = stationary.uniform_grid(args.x_min, args.x_max, args.h)
    if kind is stationary.ProfileKind.BARRIER:
        prof = stationary.build_barrier(p, args.delta, args.eps0, x)
        _, res = stationary.upper_solution_residual(prof, x)
        if res.size and res.min() < -1e-8:
            raise NumericalFailure(f"barrier violates the upper-solution inequality: {res.min()}")
    else:
        prof = stationary.build_profile(kind, p, x)
        res = stationary.ode_residual(prof, p)
        if not res < RESIDUAL_GATE:
            raise NumericalFailure(f"ode residual {res} exceeds the gate {RESIDUAL_GATE}")
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        stationary.write_profile_csv(prof, args.out)
    else:
        tmp = _out_dir(args) / f"profile_{kind.value}.csv"
        stationary.write_profile_csv(prof, tmp)
        print(f"wrote={tmp}")
    print(f"kind={kind.value}\na={_g(prof.a)}")
    return EXIT_OK


def _sim_config(args) -> pde.SimConfig:
    return pde.SimConfig(dt=args.dt, t_max=args.tmax, steady_tol=args.steady_tol,
                         snapshot_every=args.snapshots)


def cmd_simulate(args) -> int:
    p = ModelParams(args.alpha, args.L)
    data = pde.InitialData(args.family, args.sigma, args.k)
    data.check_rates(p.alpha)
    cfg = _sim_config(args)
    cfg.check_stability(p.alpha)
    grid = dynamics.simulation_grid(p, (args.sigma,), h=args.h, margin=args.margin)
    out = _out_dir(args)
    rec = pde.SnapshotRecorder(args.snapshots)
    fld = pde.make_initial(data, grid, p)
    final, steady = pde.evolve(fld, p, cfg, observer=rec)
    frames = rec.frames
    if not frames or frames[-1].time != final.time:
        frames.append(final)
    pde.write_snapshots(frames, out / "snapshots.csv")
    outcome = dynamics.label_field(p, final, steady, args.classify_tol)
    items = {
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "alpha": p.alpha, "L": p.half_width,
        "Lstar": phase_plane.critical_half_width(p.alpha),
        "family": data.family, "sigma": data.sigma, "k": data.k,
        "x_min": grid.x_min, "x_max": grid.x_max, "n": grid.n, "h": grid.h,
        "dt": cfg.dt, "t_max": cfg.t_max, "steady_tol": cfg.steady_tol,
        "snapshot_every": cfg.snapshot_every, "classify_tol": args.classify_tol,
        "final_time": final.time, "steady": str(steady).lower(),
        "outcome": outcome.label.value,
    }
    for key in ("Vs", "Vg", "Vb"):
        d = outcome.distances.get(key)
        items[f"dist_{key}"] = "nan" if d is None else float(d)
    pde.write_manifest(items, out / "manifest.txt")
    print(f"outcome={outcome.label.value}\nfinal_t={_g(final.time)}\nsteady={str(steady).lower()}")
    return EXIT_UNDETERMINED if outcome.label is dynamics.Label.UNDETERMINED else EXIT_OK


def cmd_threshold(args) -> int:
    p = ModelParams(args.alpha, args.L)
    pde.InitialData(args.family, 0.0, args.k).check_rates(p.alpha)
    cfg = _sim_config(args)
    res = dynamics.find_thresholds(p, args.family, cfg, _pair(args.bracket), args.sigma_tol,
                                   args.k, args.h, args.classify_tol)
    path = Path(args.out) if args.out else _out_dir(args) / "thresholds.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    dynamics.write_threshold_csv(res, path)
    print(f"wrote={path}")
    if res.all_spreading:
        print("all_spreading=true")
        return EXIT_OK
    print(f"sigma_lower={_g(res.sigma_lower.lo)},{_g(res.sigma_lower.hi)}")
    print(f"sigma_upper={_g(res.sigma_upper.lo)},{_g(res.sigma_upper.hi)}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    alpha = check_alpha(args.alpha)
    if args.L_values:
        Ls = _floats(args.L_values)
    else:
        Lstar = phase_plane.critical_half_width(alpha)
        Ls = [f * Lstar for f in _floats(args.L_factors)]
    for L in Ls:
        ModelParams(alpha, L)
    cfg = _sim_config(args)
    rows = dynamics.regime_sweep(alpha, Ls, args.family, cfg, _pair(args.bracket),
                                 args.sigma_tol, args.k, args.h, args.workers)
    path = Path(args.out) if args.out else _out_dir(args) / "sweep.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    dynamics.write_sweep_csv(rows, path)
    print(f"wrote={path}")
    for r in rows:
        if r.error:
            print(f"row_error L={_g(r.L)} {r.error}", file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

_SIM_DEFAULTS = {
    "dt": (1e-2, float), "tmax": (2000.0, float), "steady_tol": (1e-7, float),
    "snapshots": (0.0, float), "h": (0.02, float), "classify_tol": (1e-3, float),
    "family": ("step", str), "k": (1.0, float), "out_dir": (None, str), "out": (None, str),
}

DEFAULTS = {
    "critical-width": {"alpha": (None, float), "points": (200, int)},
    "ell-curve": {"alpha": (None, float), "points": (200, int),
                  "a_min": (phase_plane.DEFAULT_A_MIN, float), "out": (None, str)},
    "stationary": {"alpha": (None, float), "L": (None, float), "kind": ("big", str),
                   "h": (0.01, float), "x_min": (-30.0, float), "x_max": (30.0, float),
                   "delta": (1e-2, float), "eps0": (5e-2, float),
                   "out": (None, str), "out_dir": (None, str)},
    "simulate": {"alpha": (None, float), "L": (None, float), "sigma": (0.0, float),
                 "margin": (40.0, float), **_SIM_DEFAULTS},
    "threshold": {"alpha": (None, float), "L": (None, float), "bracket": ("-60,60", str),
                  "sigma_tol": (1e-4, float), **_SIM_DEFAULTS},
    "sweep": {"alpha": (None, float), "L_values": (None, str), "L_factors": ("0.5,1,2", str),
              "bracket": ("-60,60", str), "sigma_tol": (1e-4, float), "workers": (1, int),
              **_SIM_DEFAULTS},
}

_FLAG_HELP = {
    "alpha": "bistable threshold in (0, 1/2)",
    "L": "strip half-width",
    "kind": "big | small | upper_small | ground | barrier",
    "family": "step | logistic",
    "k": "logistic steepness",
    "bracket": "initial shift bracket lo,hi",
    "snapshots": "snapshot cadence in time units (0: final field only)",
    "L_values": "comma-separated half-widths",
    "L_factors": "comma-separated multiples of L* (used without --L-values)",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hostile-strip", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, options in DEFAULTS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="key=value file; flags override it")
        for key, (default, conv) in options.items():
            flag = "--" + key.replace("_", "-")
            extra = {"type": conv} if conv is not str else {}
            if key == "kind":
                extra["choices"] = [k.value for k in stationary.ProfileKind
                                    if k.value not in ("compact_bump", "periodic")]
            if key == "family":
                extra["choices"] = ["step", "logistic"]
            help_text = _FLAG_HELP.get(key, "")
            if default is not None:
                help_text = f"{help_text} (default {default})".strip()
            sp.add_argument(flag, dest=key, default=None, help=help_text, **extra)
    return parser


COMMANDS = {
    "critical-width": cmd_critical_width,
    "ell-curve": cmd_ell_curve,
    "stationary": cmd_stationary,
    "simulate": cmd_simulate,
    "threshold": cmd_threshold,
    "sweep": cmd_sweep,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _resolve(args, DEFAULTS[args.command])
        missing = [k for k, (d, _) in DEFAULTS[args.command].items()
                   if d is None and getattr(args, k) is None and k in ("alpha", "L")]
        if missing:
            raise DomainError(f"missing required value(s): {', '.join(missing)}")
        return COMMANDS[args.command](args)
    except DomainError as exc:
        print(f"error=domain message={exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (NumericalFailure, *NUMERIC_ERRORS) as exc:
        print(f"error=numerical type={type(exc).__name__} message={exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
