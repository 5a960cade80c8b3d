from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hostile_strip.dynamics import (
    BracketError,
    Label,
    MonotonicityError,
    Outcome,
    SweepRow,
    ThresholdResult,
    Bracket,
    _margin_label,
    check_monotone,
    classify,
    find_thresholds,
    ground_shadowing,
    label_field,
    profile_set,
    regime_of,
    regime_sweep,
    simulation_grid,
    spreading_certificate,
    write_sweep_csv,
    write_threshold_csv,
)
from hostile_strip.pde import Field, InitialData, SimConfig
from hostile_strip.phase_plane import blocking_half_width, critical_half_width
from hostile_strip.reaction import DomainError, ModelParams, theta
from hostile_strip.stationary import ProfileKind

ALPHA = 0.25
LS = critical_half_width(ALPHA)
LC = blocking_half_width(ALPHA)
TOL = 1e-3

dist = st.one_of(st.none(), st.floats(min_value=0.0, max_value=1.0))


@given(dist, dist, dist)
def test_margin_rule_invariant(ds, dg, db):
    d = {"Vs": ds, "Vg": dg, "Vb": db}
    label = _margin_label(d, TOL)
    if label is not Label.UNDETERMINED:
        vals = sorted(v for v in d.values() if v is not None)
        assert vals[0] < TOL
        assert len(vals) == 1 or vals[1] > 2 * TOL


def test_margin_rule_examples():
    assert _margin_label({"Vs": 1e-4, "Vg": 0.3, "Vb": 1.0}, TOL) is Label.RESIDUE
    assert _margin_label({"Vs": None, "Vg": None, "Vb": 1e-4}, TOL) is Label.SPREADING
    assert _margin_label({"Vs": 0.5, "Vg": 5e-4, "Vb": 0.5}, TOL) is Label.TRANSITION
    assert _margin_label({"Vs": 5e-4, "Vg": 1.5e-3, "Vb": 1.0}, TOL) is Label.UNDETERMINED
    assert _margin_label({"Vs": 2e-3, "Vg": 0.3, "Vb": 1.0}, TOL) is Label.UNDETERMINED


def test_profile_sets_per_regime():
    g = simulation_grid(ModelParams(ALPHA, 0.5 * LS))
    assert profile_set(ModelParams(ALPHA, 0.5 * LS), g).keys() == ["Vb"]
    mid = ModelParams(ALPHA, 0.5 * (LC + LS))
    ps = profile_set(mid, simulation_grid(mid))
    assert ps.keys() == ["Vs", "Vg", "Vb"] and ps.transition_kind is ProfileKind.UPPER_SMALL
    wide = ModelParams(ALPHA, 2 * LS)
    ps = profile_set(wide, simulation_grid(wide))
    assert ps.transition_kind is ProfileKind.GROUND


def test_certificate_trivial_fields():
    p = ModelParams(ALPHA, 2 * LS)
    g = simulation_grid(p)
    assert spreading_certificate(Field(g, np.ones(g.n)), p)
    assert not spreading_certificate(Field(g, np.zeros(g.n)), p)


def test_certificate_rejects_small_profile():
    p = ModelParams(ALPHA, 2 * LS)
    g = simulation_grid(p)
    vs = profile_set(p, g).profiles["Vs"]
    right = g.x > p.L
    assert vs.v[right].max() < theta(ALPHA) < 0.5 * (theta(ALPHA) + 1.0)
    assert not spreading_certificate(Field(g, vs.v.copy()), p)


def test_spreading_below_critical_width():
    o = classify(ModelParams(ALPHA, 0.5 * LS), InitialData("step", 0.0), certificate="off")
    assert o.label is Label.SPREADING and o.steady
    assert o.distances["Vb"] < 1e-2 and o.distances["Vs"] is None


def test_residue_for_far_left_front():
    o = classify(ModelParams(ALPHA, 2 * LS), InitialData("step", -50.0))
    assert o.label is Label.RESIDUE and not o.certified


def test_spreading_for_far_right_front():
    o = classify(ModelParams(ALPHA, 2 * LS), InitialData("step", 50.0))
    assert o.label is Label.SPREADING and o.certified


def test_certificate_audit_agrees_with_full_run():
    p = ModelParams(ALPHA, 2 * LS)
    o = classify(p, InitialData("step", 5.0), certificate="audit")
    assert o.certified and o.certified_time is not None
    assert o.label is Label.SPREADING and o.steady
    assert o.final_time > o.certified_time


def test_blocking_between_blocking_and_critical_width():
    # a stable small profile already exists below L*; a far-left front stops at it
    p = ModelParams(ALPHA, 0.5 * (LC + LS))
    o = classify(p, InitialData("step", -20.0))
    assert o.label is Label.RESIDUE


def test_classify_rejects_shift_outside_grid():
    p = ModelParams(ALPHA, LS)
    with pytest.raises(DomainError):
        classify(p, InitialData("step", 500.0), grid=simulation_grid(p))


def test_label_field_unsteady_is_undetermined():
    p = ModelParams(ALPHA, 2 * LS)
    g = simulation_grid(p)
    vs = profile_set(p, g).profiles["Vs"]
    assert label_field(p, Field(g, vs.v.copy()), steady=False).label is Label.UNDETERMINED
    assert label_field(p, Field(g, vs.v.copy()), steady=True).label is Label.RESIDUE


def _o(sigma, label):
    return Outcome(Label(label), {}, True, 0.0, sigma=sigma)


def test_monotone_log_check():
    check_monotone([_o(0, "Residue"), _o(1, "Transition"), _o(2, "Spreading")])
    check_monotone([_o(0, "Residue"), _o(1, "Undetermined"), _o(2, "Transition")])
    with pytest.raises(MonotonicityError):
        check_monotone([_o(0, "Spreading"), _o(1, "Residue")])
    with pytest.raises(MonotonicityError):
        check_monotone([_o(0, "Transition"), _o(1, "Residue")])


def test_all_spreading_below_critical_width():
    res = find_thresholds(ModelParams(ALPHA, 0.5 * LS))
    assert res.all_spreading and res.sigma_lower is None and res.sigma_upper is None
    assert all(o.label is Label.SPREADING for o in res.log)
    assert res.bracket == (-120.0, 120.0)


def test_bracket_error_when_both_ends_residue():
    with pytest.raises(BracketError):
        find_thresholds(ModelParams(ALPHA, 2 * LS), bracket=(-1.0, 0.0))


def test_bracket_validation():
    with pytest.raises(DomainError):
        find_thresholds(ModelParams(ALPHA, 2 * LS), bracket=(1.0, 0.0))


def test_thresholds_coarse_at_wide_strip(tmp_path):
    p = ModelParams(ALPHA, 2 * LS)
    res = find_thresholds(p, sigma_tol=0.05)
    lo, up = res.sigma_lower, res.sigma_upper
    assert lo.width < 0.05 and up.width < 0.05
    assert lo.hi <= up.hi and lo.lo <= up.lo
    for o in res.log:
        if o.sigma <= lo.lo:
            assert o.label is Label.RESIDUE
        if o.sigma >= up.hi:
            assert o.label is Label.SPREADING
    path = tmp_path / "t.csv"
    write_threshold_csv(res, path)
    rows = path.read_text().splitlines()
    assert rows[0] == "sigma,outcome,dist_Vs,dist_Vg,dist_Vb,final_t"
    assert len(rows) == len(res.log) + 1
    sig = [float(r.split(",")[0]) for r in rows[1:]]
    assert sig == sorted(sig)


def test_shadowing_deep_spreading_stays_away():
    p = ModelParams(ALPHA, 2 * LS)
    g = simulation_grid(p, (60.0,))
    ps = profile_set(p, g)
    w = (-20.0, 20.0)
    mask = g.window_mask(w)
    gap = float(np.max(np.abs(ps.profiles["Vb"].v - ps.profiles["Vg"].v)[mask]))
    res = ground_shadowing(p, SimConfig(t_max=60.0), 60.0, grid=g, window=w)
    assert res.min_distance > gap - TOL - 1e-9
    times = [t for t, _ in res.trace]
    assert times == pytest.approx(np.arange(0.0, len(times)))
    assert all(math.isfinite(d) for _, d in res.trace)


def test_shadowing_needs_ground_profile():
    with pytest.raises(DomainError):
        ground_shadowing(ModelParams(ALPHA, LS), None, 0.0)


def test_regime_of():
    assert regime_of(ALPHA, 0.5 * LS) == "spreading"
    assert regime_of(ALPHA, LS) == "dichotomy"
    assert regime_of(ALPHA, 2 * LS) == "trichotomy"
    vals = np.linspace(0.5 * LS, 1.5 * LS, 11)
    flips = [regime_of(ALPHA, L) for L in vals]
    assert flips[:5] == ["spreading"] * 5 and flips[5] == "dichotomy" and flips[6:] == ["trichotomy"] * 5


def test_sweep_rows_and_error_capture(tmp_path):
    rows = regime_sweep(ALPHA, [-1.0, 0.5 * LS], sigma_tol=1.0)
    assert rows[0].error and "DomainError" in rows[0].error
    assert rows[1].error is None and rows[1].sigma_lower is None and rows[1].regime == "spreading"
    rows.append(SweepRow(2 * LS, LS, "trichotomy", Bracket(3.0, 3.1), Bracket(3.0, 3.1)))
    write_sweep_csv(rows, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "L,Lstar,regime,sigma_lower_lo,sigma_lower_hi,sigma_upper_lo,sigma_upper_hi"
    assert lines[2].endswith(",nan,nan,nan,nan")
    assert lines[3].split(",")[3:] == ["3", "3.1000000000000001", "3", "3.1000000000000001"]


def test_threshold_result_sorted_log():
    r = ThresholdResult(None, None, [_o(2, "Spreading"), _o(-1, "Residue")])
    assert [o.sigma for o in r.sorted_log()] == [-1, 2]
