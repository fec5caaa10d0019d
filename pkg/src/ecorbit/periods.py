"""Period lattice of a real curve via the arithmetic-geometric mean.

The normalisation is omega1 real and positive, Im(omega2) > 0, and
Re(omega2) equal to 0 (two real components, rectangular lattice) or
omega1/2 (one real component, rhombic lattice).  All of the period
arithmetic runs in mpmath at ``PERIOD_DPS`` digits because torus
coordinates downstream are kept to 192 bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .curve import Curve, cubic_roots
from .errors import PrecisionError
from .quad import CubicIntegrator

PERIOD_DPS = 70
AGM_MAX_ITER = 64
LAURENT_ORDER = 12

RECTANGULAR = "rectangular"
RHOMBIC = "rhombic"


def agm(a, b):
    """Arithmetic-geometric mean of two positive mpf values at the working precision."""
    tol = mpmath.ldexp(1, -mpmath.mp.prec + 4)
    for _ in range(AGM_MAX_ITER):
        if abs(a - b) <= tol * abs(a):
            return (a + b) / 2
        a, b = (a + b) / 2, mpmath.sqrt(a * b)
    raise PrecisionError(
        f"AGM failed to converge in {AGM_MAX_ITER} iterations; rescale the curve coefficients")


def laurent_coefficients(g2: Fraction, g3: Fraction, order: int = LAURENT_ORDER) -> tuple:
    """Exact c_2..c_order with wp(z) = 1/z^2 + sum_k c_k z^(2k-2)."""
    c = {2: g2 / 20, 3: g3 / 28}
    for k in range(4, order + 1):
        s = sum(c[m] * c[k - m] for m in range(2, k - 1))
        c[k] = Fraction(3, (2 * k + 1) * (k - 3)) * s
    return tuple(c[k] for k in range(2, order + 1))


@dataclass(frozen=True)
class Lattice:
    """Period lattice <omega1, omega2> with float and high-precision copies.

    ``laurent_coeffs[i]`` is c_{i+2}; ``roots`` are the real roots of the
    canonical cubic, ascending.
    """

    omega1: float
    omega2: complex
    shape: str
    q: float
    laurent_coeffs: tuple
    roots: tuple
    g2: float
    g3: float
    omega1_mp: mpmath.mpf = field(repr=False)
    omega2_imag_mp: mpmath.mpf = field(repr=False)
    q_mp: mpmath.mpf = field(repr=False)
    roots_mp: tuple = field(repr=False)
    g2_mp: mpmath.mpf = field(repr=False)
    g3_mp: mpmath.mpf = field(repr=False)
    laurent_exact: tuple = field(repr=False)

    @property
    def rectangular(self) -> bool:
        return self.shape == RECTANGULAR

    @property
    def tau(self) -> complex:
        return self.omega2 / self.omega1

    @property
    def shortest(self) -> float:
        """Length of the shortest nonzero lattice vector."""
        return min(self.omega1, abs(self.omega2), abs(self.omega2 - self.omega1))


def _mpf(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


def compute_periods(curve: Curve, dps: int = PERIOD_DPS) -> Lattice:
    """AGM periods of ``curve`` in the normalisation described in the module docstring."""
    with mpmath.workdps(dps):
        g2, g3 = _mpf(curve.g2_exact), _mpf(curve.g3_exact)
        roots = cubic_roots(g2, g3, curve.two_components, lib=mpmath)
        roots = [_polish(e, g2, g3) for e in roots]
        if curve.two_components:
            e1, e2, e3 = roots
            w1 = mpmath.pi / agm(mpmath.sqrt(e3 - e1), mpmath.sqrt(e3 - e2))
            im2 = mpmath.pi / agm(mpmath.sqrt(e3 - e1), mpmath.sqrt(e2 - e1))
            re2 = mpmath.mpf(0)
            q = mpmath.exp(-2 * mpmath.pi * im2 / w1)
            shape = RECTANGULAR
        else:
            (e,) = roots
            beta = mpmath.sqrt(3 * e * e - g2 / 4)
            w1 = 2 * mpmath.pi / agm(2 * mpmath.sqrt(beta), mpmath.sqrt(2 * beta + 3 * e))
            im2 = mpmath.pi / agm(2 * mpmath.sqrt(beta), mpmath.sqrt(2 * beta - 3 * e))
            re2 = w1 / 2
            q = -mpmath.exp(-2 * mpmath.pi * im2 / w1)
            shape = RHOMBIC
        coeffs = laurent_coefficients(curve.g2_exact, curve.g3_exact)
        return Lattice(
            omega1=float(w1),
            omega2=complex(float(re2), float(im2)),
            shape=shape,
            q=float(q),
            laurent_coeffs=tuple(float(c) for c in coeffs),
            roots=tuple(float(e) for e in roots),
            g2=curve.g2,
            g3=curve.g3,
            omega1_mp=w1,
            omega2_imag_mp=im2,
            q_mp=q,
            roots_mp=tuple(roots),
            g2_mp=g2,
            g3_mp=g3,
            laurent_exact=coeffs,
        )


def _polish(e, g2, g3, steps: int = 2):
    for _ in range(steps):
        fp = 12 * e * e - g2
        if fp == 0:
            break
        e = e - (4 * e ** 3 - g2 * e - g3) / fp
    return e


def periods_by_quadrature(curve: Curve) -> float:
    """omega1 as twice the integral of dX/sqrt(f) from the largest root to infinity."""
    return 2.0 * CubicIntegrator(curve).integral(curve.roots[-1], math.inf)


def bounded_loop_period(curve: Curve) -> float:
    """omega1 as twice the integral of dX/sqrt(|f|) across the bounded oval [e1, e2]."""
    if not curve.two_components:
        raise ValueError("curve has no bounded component")
    e1, e2, _ = curve.roots
    return 2.0 * CubicIntegrator(curve).integral(e1, e2)
