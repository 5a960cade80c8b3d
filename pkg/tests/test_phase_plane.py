from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from hostile_strip.phase_plane import (
    BracketError,
    bisect_root,
    blocking_half_width,
    critical_half_width,
    ell_minimum,
    log_a_grid,
    span_curve,
    spans,
    v1_of_a,
    v2_of_a,
)
from hostile_strip.reaction import DomainError, outer_reaction, theta


def _v1_oracle(alpha, a):
    # energy balance written with a quadrature instead of the factored polynomial
    def g(v):
        integral, _ = quad(lambda s: outer_reaction(alpha, s), v, 1.0, epsabs=1e-15)
        return v * v - a * a - 2.0 * integral

    return brentq(g, a, 1.0, xtol=1e-15)


def _v2_oracle(alpha, a):
    def g(v):
        integral, _ = quad(lambda s: outer_reaction(alpha, s), 0.0, v, epsabs=1e-15)
        return v * v - a * a + 2.0 * integral

    return brentq(g, a, theta(alpha), xtol=1e-15)


def _span_oracle(a, v):
    # x-length of a cosh from its minimum to the ordinate v
    val, _ = quad(lambda s: 1.0 / math.sqrt(s + a), a, v, weight="alg", wvar=(-0.5, 0.0),
                  epsabs=1e-14, epsrel=1e-13)
    return val


alphas = st.floats(min_value=0.02, max_value=0.48)
fracs = st.floats(min_value=1e-3, max_value=1.0 - 1e-3)


@given(alphas, fracs)
@settings(max_examples=40, deadline=None)
def test_v1_v2_against_quadrature_roots(alpha, frac):
    a = frac * theta(alpha)
    assert abs(v1_of_a(alpha, a) - _v1_oracle(alpha, a)) < 1e-9
    assert abs(v2_of_a(alpha, a) - _v2_oracle(alpha, a)) < 1e-9


@given(alphas, fracs)
@settings(max_examples=40, deadline=None)
def test_spans_against_quadrature(alpha, frac):
    a = frac * theta(alpha)
    st_ = spans(alpha, a)
    assert abs(st_.R - _span_oracle(a, st_.v1)) < 1e-9
    assert abs(st_.r - _span_oracle(a, st_.v2)) < 1e-8
    assert st_.ell == pytest.approx(st_.R - st_.r, abs=1e-15)


@given(alphas, fracs)
@settings(max_examples=40, deadline=None)
def test_intersection_ordering(alpha, frac):
    a = frac * theta(alpha)
    st_ = spans(alpha, a)
    assert a < st_.v2 <= theta(alpha)
    assert st_.v2 < st_.v1 < 1.0


def test_v2_at_theta_is_theta_and_above_is_rejected():
    th = theta(0.25)
    assert v2_of_a(0.25, th) == th
    with pytest.raises(DomainError):
        v2_of_a(0.25, th + 1e-9)


def test_spans_above_theta_has_no_small_span():
    st_ = spans(0.25, 0.5)
    assert st_.v2 is None and st_.r is None and st_.ell is None
    assert st_.R > 0


def test_critical_half_width_quarter():
    # ell(theta) = R(theta) since r(theta) = 0
    th = theta(0.25)
    R = _span_oracle(th, _v1_oracle(0.25, th))
    assert abs(critical_half_width(0.25) - 0.5 * R) < 1e-9
    assert critical_half_width(0.25) == pytest.approx(0.32632610131848, abs=1e-12)


def test_log_grid_ends_exactly_at_theta():
    g = log_a_grid(0.1, 200)
    assert len(g) == 200 and g[-1] == theta(0.1) and g[0] == pytest.approx(1e-4)
    assert np.all(np.diff(g) > 0)


def test_span_curve_rows_sorted_and_validated():
    rows = span_curve(0.25, [0.2, 0.01, 0.1])
    assert [r.a for r in rows] == [0.01, 0.1, 0.2]
    with pytest.raises(DomainError):
        span_curve(0.25, [0.5])


@pytest.mark.parametrize("alpha", [0.1, 0.25, 0.4])
def test_ell_minimum_is_interior_and_below_terminal_value(alpha):
    a_c, ell_min = ell_minimum(alpha)
    th = theta(alpha)
    assert 0.0 < a_c < th
    fine = np.linspace(0.5 * a_c, th, 4001)
    ells = np.array([spans(alpha, a).ell for a in fine])
    assert ell_min <= ells.min() + 1e-12
    assert abs(fine[np.argmin(ells)] - a_c) < 2 * (fine[1] - fine[0])
    assert ell_min < 2.0 * critical_half_width(alpha)
    assert blocking_half_width(alpha) == pytest.approx(0.5 * ell_min)


def test_ell_near_tangency_rises_like_square_root():
    # r(a) ~ c sqrt(theta - a): the slope of ell blows up at theta
    alpha = 0.25
    th = theta(alpha)
    d1, d2 = 1e-6, 4e-6
    r1 = spans(alpha, th - d1).r
    r2 = spans(alpha, th - d2).r
    assert r2 / r1 == pytest.approx(2.0, rel=1e-3)


def test_bisect_root_requires_sign_change():
    with pytest.raises(BracketError):
        bisect_root(lambda x: x * x + 1.0, -1.0, 1.0)
    assert abs(bisect_root(lambda x: x**3 - 2.0, 0.0, 2.0) - 2 ** (1 / 3)) < 1e-12
