import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ecorbit.accumulate import Counter
from ecorbit.curve import BOUNDED, UNBOUNDED, make_curve
from ecorbit.distribution import (EVERYTHING, Ball, DensityModel, Region, XInterval, ball_measure,
                                  density_table, discrepancy_residual, empirical_vs_theoretical,
                                  fit_exponent, make_model, point_density, region_density,
                                  theoretical_x_cdf)
from ecorbit.errors import ValidationError
from ecorbit.orbit import make_orbit, orbit_scan, tail_law_x
from ecorbit.periods import compute_periods


@pytest.fixture(scope="module")
def models(x3p1, e37_short, e37_long):
    return {
        "x3p1": make_model(x3p1[2]),
        "e37_bounded": make_model(e37_short[2]),
        "e37_unbounded": DensityModel(e37_short[0], e37_short[2].lattice, UNBOUNDED),
        "e37_long": make_model(e37_long[2]),
    }


@pytest.mark.parametrize("name", ["x3p1", "e37_bounded", "e37_unbounded", "e37_long"])
def test_total_mass_is_one(models, name):
    assert models[name].total_mass() == pytest.approx(1.0, abs=1e-9)


def test_cdf_properties(models):
    m = models["e37_bounded"]
    e1, e2, e3 = m.curve.roots
    assert theoretical_x_cdf(m, e1).value == pytest.approx(0.0, abs=1e-15)
    # the bounded lobe carries half the mass
    assert theoretical_x_cdf(m, e2).value == pytest.approx(0.5, abs=1e-10)
    gap = theoretical_x_cdf(m, 0.5 * (e2 + e3))
    assert gap.clamped and gap.value == 0.5
    assert theoretical_x_cdf(m, math.inf).value == 1.0
    low = theoretical_x_cdf(m, e1 - 1)
    assert low.clamped and low.value == 0.0
    f = models["x3p1"]
    e = f.curve.roots[0]
    assert theoretical_x_cdf(f, e).value == pytest.approx(0.0, abs=1e-12)
    xs = np.linspace(e, e + 50, 60)
    vals = [theoretical_x_cdf(f, x).value for x in xs]
    assert all(np.diff(vals) >= 0) and vals[-1] < 1


def test_cdf_derivative_is_density(models):
    m = models["x3p1"]
    for X in (0.0, 1.5, 7.0):
        h = 1e-5
        slope = (theoretical_x_cdf(m, X + h).value - theoretical_x_cdf(m, X - h).value) / (2 * h)
        assert slope == pytest.approx(m.density(X), rel=1e-6)


def test_eta_zero_cases(models):
    m = models["e37_unbounded"]
    E = m.curve
    P0 = E.point(0, 4)
    assert point_density(m, P0, 0.05).value == 0.0
    e1, e2, _ = E.roots
    assert region_density(m, Region(intervals=(XInterval(e1, e2),))) == 0.0
    assert m.density(0.0) == 0.0


def test_point_density_linear_in_eps(models):
    m = models["x3p1"]
    P0 = m.curve.lift_x(1.0, 1)
    a = point_density(m, P0, 0.01)
    b = point_density(m, P0, 0.005)
    assert b.value == pytest.approx(a.value / 2, rel=1e-15)
    assert a.uncertainty < 0.01 * a.value


def test_point_density_matches_arc_interval(models):
    m = models["x3p1"]
    L = m.lattice
    for x0 in (0.3, 2.0):
        P0 = m.curve.lift_x(x0, 1)
        X0, Y0 = m.curve.conversion.to_canonical(P0.x, P0.y)
        eps = 1e-3
        speed = math.hypot(Y0, 6 * X0 * X0 - L.g2 / 2)
        delta = eps * abs(Y0) / speed
        iv = region_density(m, Region(intervals=(XInterval(X0 - delta, X0 + delta, ysign=1),)))
        assert point_density(m, P0, eps).value == pytest.approx(iv, rel=0.01)


BALL_POINTS = [(-0.9, 1), (-0.5, -1), (0.2, 1), (1.2, 1), (2.0, -1)]


def test_ball_hits_on_e37a(e37_long, models):
    E, P, orbit = e37_long
    m = models["e37_long"]
    n_max, eps = 10 ** 5, 0.1
    for x0, sign in BALL_POINTS:
        P0 = E.lift_x(x0, sign)
        X0, Y0 = E.conversion.to_canonical(P0.x, P0.y)
        (c,) = orbit_scan(orbit, n_max, [Counter(lambda b: np.hypot(b.X - X0, b.Y - Y0) < eps)])
        share = c.result() / n_max
        assert share == pytest.approx(point_density(m, P0, eps).value, rel=0.10)
        assert share == pytest.approx(ball_measure(m, Ball(X0, Y0, eps)), rel=0.05)


def test_region_density_basics(models):
    m = models["x3p1"]
    assert region_density(m, EVERYTHING) == 1.0
    with pytest.raises(ValidationError):
        region_density(m, [(0, 1)])
    whole = region_density(m, Region(intervals=(XInterval(m.curve.roots[0], math.inf),)))
    assert whole == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=20)
@given(st.floats(-0.9, 5.0), st.floats(0.01, 3.0))
def test_y_sign_symmetry(lo, width):
    E = make_curve("short", 0, 1)
    m = DensityModel(E, compute_periods(E), UNBOUNDED)
    up = region_density(m, Region(intervals=(XInterval(lo, lo + width, ysign=1),)))
    down = region_density(m, Region(intervals=(XInterval(lo, lo + width, ysign=-1),)))
    both = region_density(m, Region(intervals=(XInterval(lo, lo + width),)))
    assert up == down and up + down == pytest.approx(both, rel=1e-14)


@pytest.mark.parametrize("name", ["x3p1", "e37_unbounded"])
def test_tail_law_consistency(models, name):
    m = models[name]
    L = m.lattice
    # next term of (2/w1) int_X^inf dX/sqrt(4X^3 - g2 X - g3): (g2 / (20 w1)) X^(-5/2)
    coef = abs(L.g2) / (20 * L.omega1) + 1.0
    for X in (1e2, 1e3, 1e4):
        rho = region_density(m, Region(intervals=(XInterval(X, math.inf),)))
        assert abs(rho - tail_law_x(L, X)) <= coef * X ** -2.5


def test_discrepancy_everything_is_zero(x3p1, models):
    res = discrepancy_residual(x3p1[2], models["x3p1"], EVERYTHING, [10, 100, 1000])
    assert [r for _, r in res.rows] == [0.0, 0.0, 0.0]
    assert res.exponent is None


def test_discrepancy_random_point():
    rng = np.random.default_rng(99)
    E = make_curve("short", 0, 1)
    P = E.lift_x(float(rng.uniform(0, 3)), 1)
    orbit = make_orbit(E, P)
    grid = np.unique(np.logspace(2, 6, 25).astype(int))
    res = discrepancy_residual(orbit, make_model(orbit), Region(intervals=(XInterval(0.0, 2.0),)), grid)
    assert res.exponent < 0.75
    n, c = res.counts[-1]
    assert abs(c / n - res.rho) < 2 / math.sqrt(n) * 10


def test_fit_exponent():
    ns = [10, 100, 1000]
    assert fit_exponent(ns, [n ** 0.5 for n in ns]) == pytest.approx(0.5)
    assert fit_exponent(ns, [0, 0, 1]) is None


def test_cdf_distance_shrinks(x3p1, models):
    small = empirical_vs_theoretical(x3p1[2], models["x3p1"], 10 ** 3)
    large = empirical_vs_theoretical(x3p1[2], models["x3p1"], 10 ** 5)
    assert large.distance < 0.01
    assert large.distance <= small.distance + 0.005


def test_density_table(models):
    rows = density_table(models["x3p1"], [0.0, 1.0])
    assert rows[0][0] == 0.0 and rows[0][1] > rows[1][1] > 0
    assert 0 < rows[0][2] < rows[1][2] < 1


def test_bounded_model_needs_oval():
    E = make_curve("short", 0, 1)
    with pytest.raises(ValidationError):
        DensityModel(E, compute_periods(E), BOUNDED)
