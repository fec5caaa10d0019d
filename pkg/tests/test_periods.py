import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from ecorbit.curve import make_curve
from ecorbit.periods import (RECTANGULAR, RHOMBIC, agm, bounded_loop_period, compute_periods,
                             laurent_coefficients, periods_by_quadrature)

# Gamma(1/4)^2 / (2 sqrt(2 pi)): the lemniscatic real period of 4x^3 - 4x
LEMNISCATE_OMEGA1 = 2.6220575542921198


def _omega1_mpmath(E):
    """Independent oracle: mpmath tanh-sinh quadrature of 2 * int_{e}^{inf} dX / sqrt(f)."""
    with mpmath.workdps(30):
        e = mpmath.mpf(E.roots[-1])
        e = mpmath.findroot(lambda X: 4 * X ** 3 - E.g2 * X - E.g3, e)
        # f(e + u^2) / u^2, expanded using f(e) = 0
        f = lambda u: 2 / mpmath.sqrt(12 * e * e - E.g2 + 12 * e * u * u + 4 * u ** 4)
        return float(2 * mpmath.quad(f, [0, 1, mpmath.inf]))


def test_lemniscatic_period():
    gamma_form = float(mpmath.gamma(0.25) ** 2 / (2 * mpmath.sqrt(2 * mpmath.pi)))
    assert gamma_form == pytest.approx(LEMNISCATE_OMEGA1, rel=1e-15)
    L = compute_periods(make_curve("classical", 4, 0))
    assert L.omega1 == pytest.approx(LEMNISCATE_OMEGA1, rel=1e-14)
    assert L.omega1 == pytest.approx(math.pi / float(agm(mpmath.sqrt(2), 1)), rel=1e-15)
    assert L.shape == RECTANGULAR and L.omega2.real == 0


def test_x3p1_curve_period():
    E = make_curve("short", 0, 1)
    L = compute_periods(E)
    assert L.shape == RHOMBIC
    assert L.omega2.real == pytest.approx(L.omega1 / 2, rel=1e-15)
    assert L.omega1 == pytest.approx(_omega1_mpmath(E), rel=1e-12)
    assert abs(L.omega1 - periods_by_quadrature(E)) < 1e-10 * L.omega1


@given(st.floats(0.3, 3.0), st.sampled_from([(4, 0), (0, -4), (64, -64), (2, 1)]))
def test_scaling_law(lam, g):
    L1 = compute_periods(make_curve("classical", *g))
    L2 = compute_periods(make_curve("classical", lam ** 4 * g[0], lam ** 6 * g[1]))
    assert L2.omega1 == pytest.approx(L1.omega1 / lam, rel=1e-13)


def test_fifty_curve_suite():
    rng = np.random.default_rng(50)
    curves = [make_curve("classical", 4, 0), make_curve("short", 0, 1), make_curve("short", -16, 16)]
    while len(curves) < 50:
        g2, g3 = rng.uniform(-10, 10, 2)
        if abs(g2 ** 3 - 27 * g3 ** 2) > 1e-2:
            curves.append(make_curve("classical", round(g2, 3), round(g3, 3)))
    for E in curves:
        L = compute_periods(E)
        assert abs(L.omega1 - periods_by_quadrature(E)) < 1e-10 * L.omega1
        assert (L.shape == RECTANGULAR) == E.two_components
        assert abs(L.q) < 1 and (L.q > 0) == E.two_components
        if abs(L.omega2 / L.omega1) >= 0.85:
            assert abs(L.q) < 0.07
        if E.two_components:
            assert bounded_loop_period(E) == pytest.approx(L.omega1, rel=1e-10)


def test_laurent_coefficients_reproduce_invariants():
    g2, g3 = Fraction(7, 3), Fraction(-5, 2)
    c = laurent_coefficients(g2, g3)
    assert c[0] == g2 / 20 and c[1] == g3 / 28
    # c4 = c2^2 / 3 from the standard recursion
    assert c[2] == c[0] ** 2 / 3
    assert len(c) == 11


def test_quadrature_oracle_matches_mpmath():
    for ab in ((4, 0), (64, -64), (1, 5)):
        E = make_curve("classical", *ab)
        assert periods_by_quadrature(E) == pytest.approx(_omega1_mpmath(E), rel=1e-11)
