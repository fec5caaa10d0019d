"""Solution density for the family E_N: Y^2 = X^3 + A X^2 + B X.

With A = 4N^2 + 12N - 3 and B = 32(N + 3), the points of E_N whose X lies
in one of two explicit intervals on the bounded oval correspond to positive
integer solutions of a classical Diophantine problem.  This module builds
those intervals, computes the limiting share of multiples nP landing in
them, and measures the relation int_1 omega = (1/2) int_2 omega between the
two interval integrals.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import mpmath

from .accumulate import WitnessCollector
from .curve import BOUNDED, Curve, RealPoint, make_curve
from .errors import ValidationError
from .orbit import make_orbit, orbit_scan
from .periods import Lattice, compute_periods

FRUIT_DPS = 40


@dataclass(frozen=True)
class FruitInstance:
    N: int
    A: int
    B: int
    a: Fraction
    b: Fraction
    curveEN: Curve
    curveShort: Curve
    intervals: Tuple[Tuple[float, float], Tuple[float, float]]
    oval: Tuple[float, float]
    flagged: bool
    lattice: Lattice = field(repr=False)

    @property
    def shift(self) -> Fraction:
        return Fraction(self.A, 3)

    def to_short(self, X, Y):
        return X + float(self.shift), Y

    def from_short(self, x, y):
        return x - float(self.shift), y

    @property
    def intervals_unshifted(self):
        s = float(self.shift)
        return tuple((lo - s, hi - s) for lo, hi in self.intervals)


def build_instance(N: int) -> FruitInstance:
    """Curves, intervals (shifted x) and lattice for the given N.

    Even N >= 4 is the standard regime; other N where every square root is
    real are accepted with ``flagged`` set.
    """
    if isinstance(N, bool) or int(N) != N:
        raise ValidationError("N must be an integer")
    N = int(N)
    A = 4 * N * N + 12 * N - 3
    B = 32 * (N + 3)
    disc_oval = A * A - 4 * B
    if N < 2 or N * N - 4 < 0 or 4 * N * N + 4 * N - 15 < 0 or disc_oval <= 0:
        raise ValidationError(f"N = {N}: the interval endpoints or the bounded oval are not real")
    a = Fraction(B) - Fraction(A * A, 3)
    b = Fraction(2 * A ** 3, 27) - Fraction(A * B, 3)
    with mpmath.workdps(FRUIT_DPS):
        s3 = mpmath.mpf(A) / 3
        r1 = mpmath.sqrt(4 * N * N + 4 * N - 15)
        r2 = mpmath.sqrt(N * N - 4)
        x1l = (3 - 12 * N - 4 * N * N - (2 * N + 5) * r1) / 2 + s3
        x1r = -2 * (N + 3) * (N + r2) + s3
        x2l = -2 * (N + 3) * (N - r2) + s3
        x2r = -4 * mpmath.mpf(N + 3) / (N + 2) + s3
        sq = mpmath.sqrt(disc_oval)
        oval = ((-A - sq) / 2 + s3, (-A + sq) / 2 + s3)
        intervals = ((float(x1l), float(x1r)), (float(x2l), float(x2r)))
        oval = (float(oval[0]), float(oval[1]))
    curveEN = make_curve("long", 0, A, 0, B, 0)
    curveShort = make_curve("short", a, b)
    return FruitInstance(N, A, B, a, b, curveEN, curveShort, intervals, oval,
                         flagged=not (N >= 4 and N % 2 == 0), lattice=compute_periods(curveShort))


def _roots_X(inst: FruitInstance):
    """Roots (e1, e2, 0) of X^3 + A X^2 + B X, with e2 computed without cancellation."""
    sq = mpmath.sqrt(inst.A * inst.A - 4 * inst.B)
    e1 = (-inst.A - sq) / 2
    return e1, inst.B / e1, mpmath.mpf(0)


def _intervals_X(inst: FruitInstance):
    N = inst.N
    r2 = mpmath.sqrt(N * N - 4)
    return ((_roots_X(inst)[0], -2 * (N + 3) * (N + r2)),
            (-2 * (N + 3) * (N - r2), -4 * mpmath.mpf(N + 3) / (N + 2)))


def _interval_integrals_mp(inst: FruitInstance, dps: int):
    # Work in the X coordinate of E_N, where the roots stay well separated.
    # The first interval starts at the root e1; X = e1 + u^2 removes it.
    with mpmath.workdps(dps):
        e1, e2, _ = _roots_X(inst)
        (lo1, hi1), (lo2, hi2) = _intervals_X(inst)
        i1 = mpmath.quad(lambda u: 2 / mpmath.sqrt((e1 + u * u) * (e1 + u * u - e2)), [0, mpmath.sqrt(hi1 - lo1)])
        i2 = mpmath.quad(lambda X: 1 / mpmath.sqrt(X * (X - e1) * (X - e2)), [lo2, hi2])
        return +i1, +i2


def interval_integrals(inst: FruitInstance, dps: int = FRUIT_DPS) -> Tuple[float, float]:
    """(int_1, int_2) of dX/sqrt(X^3 + A X^2 + B X) over the two intervals."""
    i1, i2 = _interval_integrals_mp(inst, dps)
    return float(i1), float(i2)


def solution_density(inst: FruitInstance) -> float:
    """(int_1 + int_2) / (2 w1): the share of multiples of a bounded generator landing in the intervals."""
    i1, i2 = interval_integrals(inst)
    return (i1 + i2) / (2.0 * inst.lattice.omega1)


def conjecture_residual(inst: FruitInstance, dps: int = FRUIT_DPS) -> float:
    """|int_1 - int_2/2| / int_2."""
    with mpmath.workdps(dps):
        i1, i2 = _interval_integrals_mp(inst, dps)
        return float(abs(i1 - i2 / 2) / i2)


def arclengths(inst: FruitInstance, dps: int = FRUIT_DPS) -> Tuple[float, float]:
    """Arc length of E_N over interval 1 and over interval 2, both signs of Y counted."""
    with mpmath.workdps(dps):
        e1, e2, _ = _roots_X(inst)
        (lo1, hi1), (lo2, hi2) = _intervals_X(inst)

        def speed1(u):
            # X = e1 + u^2, Y = u sqrt(h) with h = X (X - e2)
            X = e1 + u * u
            h = X * (X - e2)
            g = mpmath.sqrt(h)
            dY = g + u * (2 * X - e2) * u / g
            return mpmath.sqrt(4 * u * u + dY * dY)

        def speed2(X):
            f = X * (X - e1) * (X - e2)
            df = 3 * X * X + 2 * inst.A * X + inst.B
            return mpmath.sqrt(1 + df * df / (4 * f))

        a1 = mpmath.quad(speed1, [0, mpmath.sqrt(hi1 - lo1)])
        a2 = mpmath.quad(speed2, [lo2, hi2])
        return 2 * float(a1), 2 * float(a2)


@dataclass
class FruitMultiples:
    ns: List[int]
    smallest_positive: Optional[int]
    empirical_density: float
    n_max: int
    warning: Optional[str] = None


def solution_multiples(inst: FruitInstance, P: RealPoint, n_max: int, threads: Optional[int] = 1) -> FruitMultiples:
    """All 0 < |n| <= n_max with X(nP) in either interval; P is a point of E_N."""
    if P.is_infinity:
        raise ValidationError("generator must be a finite point")
    Pn = inst.curveEN.point(P.x, P.y)  # validates
    xs, ys = inst.to_short(Pn.x, Pn.y)
    Ps = inst.curveShort.point(xs, ys)
    if Ps.component != BOUNDED:
        msg = "generator lies on the unbounded component: no multiple can land in the intervals"
        warnings.warn(msg)
        return FruitMultiples([], None, 0.0, n_max, msg)
    orbit = make_orbit(inst.curveShort, Ps, inst.lattice)
    (i1lo, i1hi), (i2lo, i2hi) = inst.intervals

    def inside(b):
        return ((b.X > i1lo) & (b.X < i1hi)) | ((b.X > i2lo) & (b.X < i2hi))

    (col,) = orbit_scan(orbit, n_max, [WitnessCollector(inside)], symmetric=True, threads=threads)
    ns = sorted(r[0] for r in col.result())
    pos = [n for n in ns if n > 0]
    return FruitMultiples(ns, pos[0] if pos else None, len(ns) / (2.0 * n_max) if n_max else 0.0, n_max)


def fruit_report(inst: FruitInstance) -> dict:
    return {
        "N": inst.N,
        "A": inst.A,
        "B": inst.B,
        "a": str(inst.a),
        "b": str(inst.b),
        "flagged": inst.flagged,
        "intervals_shifted_x": [list(iv) for iv in inst.intervals],
        "intervals_X": [list(iv) for iv in inst.intervals_unshifted],
        "density": solution_density(inst),
        "conjecture_residual": conjecture_residual(inst),
    }
