"""Multiples nP computed on the torus C/Lambda.

The point P is pulled back to its torus coordinate once; nP is then
wp(n z_P), where n*t mod 1 is exact integer arithmetic on a fixed-point t.
No floating-point group law is ever iterated.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import List, Optional, Sequence

import mpmath
import numpy as np

from . import diophantine as dio
from . import fixedpoint as fx
from .accumulate import Counter, OrbitBatch, WitnessCollector
from .curve import BOUNDED, INFINITY, UNBOUNDED, Curve, RealPoint
from .errors import PrecisionError, TorsionPointError, ValidationError
from .periods import Lattice, compute_periods
from .weierstrass import (TorusCoord, elliptic_log, laurent_tail_constant, wp_arrays,
                          wp_mp)

TORSION_SCREEN = 12
TORSION_TOL_BITS = 120
MAX_MULTIPLIER = 2 ** 30
DEFAULT_BATCH = 1 << 16
ROOT_SNAP = 1e-9


@dataclass(frozen=True)
class Orbit:
    """The orbit {nP} of a point P, stored as its torus coordinate ``zP``."""

    curve: Curve
    lattice: Lattice
    zP: TorusCoord
    point: Optional[RealPoint] = None

    @property
    def component(self) -> str:
        return BOUNDED if self.zP.half_shift else UNBOUNDED

    @property
    def t(self) -> Fraction:
        return Fraction(self.zP.numer, 1 << self.zP.bits)

    @cached_property
    def tail_constant(self) -> float:
        """Fitted Laurent-tail constant C of the lattice (see weierstrass)."""
        return laurent_tail_constant(self.lattice)

    @cached_property
    def growth_constant(self) -> float:
        """Tail constant fitted over 0 < t <= 1/sqrt(5), the whole range a Hurwitz witness can reach."""
        return laurent_tail_constant(self.lattice, t_max=1 / math.sqrt(5))

    def doubled(self) -> "Orbit":
        """The orbit of 2P, which always lies on the unbounded row."""
        return Orbit(self.curve, self.lattice, self.zP.times(2))


def torsion_order(zc: TorusCoord, screen: int = TORSION_SCREEN) -> Optional[int]:
    """Order of zc if it is torsion of order <= screen (to 2^-120), else None."""
    # the top bits suffice for a 2^-120 test, and keep this cheap for very wide coordinates
    k = min(zc.bits, TORSION_TOL_BITS + 16)
    t = Fraction(zc.numer >> (zc.bits - k), 1 << k)
    tol = Fraction(1, 1 << TORSION_TOL_BITS)
    for q in range(1, screen + 1):
        p = round(t * q)
        if abs(t - Fraction(p, q)) < tol:
            order = Fraction(p, q).denominator
            # on the bounded row only even multiples can return to the identity
            return math.lcm(order, 2) if zc.half_shift else order
    return None


def make_orbit(curve: Curve, P: RealPoint, lattice: Optional[Lattice] = None) -> Orbit:
    """Pull P back to the torus; rejects torsion points of order <= 12.

    Points within 1e-9 (scaled) of a 2-torsion x-coordinate count as 2-torsion.
    """
    if P.is_infinity:
        raise ValidationError("the point at infinity has no orbit")
    # x within the junction tolerance of a root: t sits near 1/2 only to sqrt precision
    X = curve.conversion.x_to_canonical(float(P.x))
    if any(abs(X - e) <= ROOT_SNAP * curve.scale for e in curve.roots):
        raise TorsionPointError(2)
    lattice = lattice or compute_periods(curve)
    zP = elliptic_log(curve, lattice, P)
    order = torsion_order(zP)
    if order is not None:
        raise TorsionPointError(order)
    return Orbit(curve, lattice, zP, P)


def orbit_from_torus(curve: Curve, lattice: Lattice, zP: TorusCoord, check_torsion: bool = True) -> Orbit:
    if zP.half_shift and not lattice.rectangular:
        raise ValidationError("a half-shifted coordinate needs two real components")
    if check_torsion:
        order = torsion_order(zP)
        if order is not None:
            raise TorsionPointError(order)
    return Orbit(curve, lattice, zP)


def orbit_from_fraction(curve: Curve, lattice: Lattice, alpha: Fraction, half_shift: bool = False) -> Orbit:
    """Orbit whose torus coordinate is the rational ``alpha`` held to ample precision.

    The fixed-point width is chosen so that n*alpha stays exact well past
    the square of alpha's denominator.
    """
    need = 2 * alpha.denominator.bit_length() + 128
    bits = max(fx.BITS, 32 * -(-need // 32))
    return orbit_from_torus(curve, lattice, TorusCoord.from_value(alpha, half_shift, bits))


# -- evaluation -------------------------------------------------------------


def _check_n(n):
    if abs(n) > MAX_MULTIPLIER:
        raise PrecisionError(
            f"|n| = {abs(n)} exceeds 2^30: n*t would lose the 2^-120 accuracy budget",
            required_bits=fx.BITS + int(abs(n)).bit_length() - 30)


def nth_point_canonical(orbit: Orbit, n: int, precision: str = "standard"):
    """Canonical (X, Y) of nP; (inf, nan) at the identity.  ``high`` returns mpf values."""
    _check_n(n)
    zc = orbit.zP.times(n)
    if zc.is_pole:
        return math.inf, math.nan
    if precision == "high":
        with mpmath.workdps(max(40, zc.bits // 3 + 20)):
            X, Y = wp_mp(orbit.lattice, zc.signed_mp(), zc.half_shift)
            return +X, +Y
    if precision != "standard":
        raise ValidationError(f"unknown precision level {precision!r}")
    p, dp = wp_arrays(orbit.lattice, [zc.signed], [zc.half_shift])
    return float(p[0]), float(dp[0])


def nth_point(orbit: Orbit, n: int, precision: str = "standard") -> RealPoint:
    """nP in the curve's input coordinates; INFINITY for the identity."""
    X, Y = nth_point_canonical(orbit, n, precision)
    if math.isinf(X):
        return INFINITY
    x, y = orbit.curve.conversion.from_canonical(float(X), float(Y))
    half = orbit.zP.half_shift and n % 2 != 0
    return RealPoint(x, y, BOUNDED if half else UNBOUNDED)


def orbit_batch(orbit: Orbit, ns, shift: Optional[TorusCoord] = None) -> OrbitBatch:
    """Evaluate n*z_P (+ shift) for an int64 array of multipliers."""
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size and int(np.abs(ns).max()) > MAX_MULTIPLIER:
        _check_n(int(np.abs(ns).max()))
    zP = orbit.zP
    offset, shift_half = 0, False
    if shift is not None:
        offset = shift.numer << (zP.bits - shift.bits) if zP.bits >= shift.bits else shift.numer >> (shift.bits - zP.bits)
        shift_half = shift.half_shift
    if zP.bits % 32 == 0 and zP.bits >= 128:
        s = fx.signed_fractions(zP.numer, ns, zP.bits, offset)
    else:
        s = np.array([fx.signed_fraction(zP.numer, int(n), zP.bits, offset) for n in ns])
    half = (zP.half_shift & (ns % 2 != 0)) ^ shift_half
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        X, Y = wp_arrays(orbit.lattice, s, half)
    pole = (s == 0) & ~half
    if pole.any():
        X[pole] = np.inf
        Y[pole] = np.nan
    x, y = orbit.curve.conversion.from_canonical(X, Y)
    return OrbitBatch(ns, s, half, X, Y, np.asarray(x, float), np.asarray(y, float))


def _ranges(lo: int, hi: int, parts: int):
    parts = max(1, min(parts, hi - lo + 1))
    step = -(-(hi - lo + 1) // parts)
    return [(a, min(hi, a + step - 1)) for a in range(lo, hi + 1, step)]


def orbit_scan(orbit: Orbit, n_max: int, accumulators: Sequence, *, start: int = 1,
               symmetric: bool = False, partitions: int = 1, threads: Optional[int] = None,
               batch: int = DEFAULT_BATCH, shift: Optional[TorusCoord] = None) -> list:
    """Feed n = start..n_max (and -n too if ``symmetric``) to ``accumulators``.

    The range is cut into ``partitions`` pieces, each filling fresh copies
    of the accumulators, optionally on ``threads`` worker threads; pieces are
    merged in order.  Returns the merged accumulators.
    """
    if n_max > 10 ** 9:
        raise ValidationError("n_max is limited to 10^9")
    _check_n(n_max)
    if n_max < start:
        return [acc.spawn() for acc in accumulators]

    def run(bounds):
        lo, hi = bounds
        local = [acc.spawn() for acc in accumulators]
        for a in range(lo, hi + 1, batch):
            ns = np.arange(a, min(hi, a + batch - 1) + 1, dtype=np.int64)
            for sign in ((1, -1) if symmetric else (1,)):
                b = orbit_batch(orbit, sign * ns, shift)
                for acc in local:
                    acc.update(b)
        return local

    pieces = _ranges(start, n_max, partitions)
    threads = threads or os.cpu_count() or 1
    if threads > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, pieces))
    else:
        results = [run(p) for p in pieces]
    merged = results[0]
    for res in results[1:]:
        for acc, other in zip(merged, res):
            acc.merge(other)
    return merged


# -- growth ---------------------------------------------------------------


@dataclass(frozen=True)
class GrowthWitness:
    n: int
    X: float
    Y: float
    bound_x: float
    bound_y: float
    hurwitz: bool
    y_ok: bool


@dataclass
class GrowthReport:
    """Multiples with x(nP) above the quadratic lower bound (canonical coordinates).

    ``tail_constant`` is the fitted stand-in for the unspecified O(n^-2)
    slack and is reported, not claimed.
    """

    witnesses: List[GrowthWitness]
    hurwitz: List[int]
    tail_constant: float
    omega1: float
    via_double: bool
    cross_checked: bool = False
    scan_agrees: Optional[bool] = None

    @property
    def ns(self) -> List[int]:
        return [w.n for w in self.witnesses]


def _bounds(m, w1, C):
    m = np.asarray(m, dtype=np.float64)
    bx = 5.0 * m * m / w1 ** 2 - C / (m * m)
    by = 2.0 * 5.0 ** 1.5 * m ** 3 / w1 ** 3 - C / m
    return bx, by


def _brute_limit(w1, C):
    # beyond this m, {m t} >= 1/(2m) already forces x(mP) under the bound
    return max(1000, int(math.ceil((1.25 * C * w1 * w1) ** 0.25)) + 10)


def growth_witnesses(orbit: Orbit, n_max: int, cross_check: Optional[bool] = None,
                     threads: Optional[int] = 1) -> GrowthReport:
    """All n <= n_max with x(nP) above the quadratic lower bound.

    Unbounded P: x(nP) > 5 n^2/w1^2 - C n^-2.  Bounded P: the same bound is
    applied to the orbit of 2P, giving x(nP) > 5 n^2/(4 w1^2) - 4 C n^-2 at
    even n.  Candidates beyond a brute-force prefix come from the Legendre
    search with psi(m) = 2m, which is complete for this bound.  The y bound
    2*5^(3/2) m^3/w1^3 - C/m on |Y| is evaluated at every witness.
    """
    via_double = orbit.zP.half_shift
    sub = orbit.doubled() if via_double else orbit
    k = 2 if via_double else 1
    M = n_max // k
    w1 = orbit.lattice.omega1
    C = orbit.growth_constant
    t_sub = sub.t
    if M < 1:
        return GrowthReport([], [], C, w1, via_double)
    mb = min(M, _brute_limit(w1, C))

    def above(b: OrbitBatch):
        bx, _ = _bounds(np.abs(b.n), w1, C)
        return b.X > bx

    (col,) = orbit_scan(sub, mb, [WitnessCollector(above)], threads=threads)
    rows = {n: (X, Y) for n, X, Y in col.result()}
    if M > mb:
        cands = [m for m in dio.khinchin_scan(t_sub, dio.power_psi(1.0, 2.0), M, "convergents") if m > mb]
        if cands:
            b = orbit_batch(sub, np.asarray(cands, np.int64))
            for m, X, Y, ok in zip(cands, b.X.tolist(), b.Y.tolist(), above(b).tolist()):
                if ok:
                    rows[m] = (X, Y)
    hurwitz = dio.hurwitz_witnesses(t_sub, M)
    hset = set(hurwitz)
    out = []
    for m in sorted(rows):
        X, Y = rows[m]
        bx, by = _bounds(m, w1, C)
        out.append(GrowthWitness(k * m, X, Y, float(bx), float(by), m in hset, abs(Y) > float(by)))
    report = GrowthReport(out, [k * m for m in hurwitz], C, w1, via_double)
    if cross_check is None:
        cross_check = M <= 10 ** 6
    if cross_check and M > mb:
        (full,) = orbit_scan(sub, M, [WitnessCollector(above)], threads=threads)
        report.cross_checked = True
        report.scan_agrees = [r[0] for r in full.result()] == sorted(rows)
    return report


@dataclass(frozen=True)
class KhinchinWitness:
    n: int
    X: object
    Y: object


def khinchin_growth_scan(orbit: Orbit, psi, n_max: int, candidates: Optional[Sequence[int]] = None,
                         threads: Optional[int] = 1) -> List[KhinchinWitness]:
    """n with X(nP) > psi(n)^2 and |Y(nP)| > psi(n)^3 (canonical coordinates).

    Without ``candidates`` every n <= n_max is scanned in double precision.
    With ``candidates`` only those n are evaluated, in extended precision,
    which reaches multiples far beyond the float range.
    """
    psi = dio.get_psi(psi)
    if candidates is None:
        def hit(b: OrbitBatch):
            n = np.abs(b.n)
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                lp = np.log2(psi.vec(n))
                return (np.log2(np.maximum(b.X, 1e-300)) > 2 * lp) & (np.log2(np.abs(b.Y) + 1e-300) > 3 * lp)

        (col,) = orbit_scan(orbit, n_max, [WitnessCollector(hit)], threads=threads)
        return [KhinchinWitness(n, X, Y) for n, X, Y in col.result()]
    out = []
    for n in candidates:
        if abs(n) > n_max:
            continue
        X, Y = _nth_point_mp(orbit, int(n))
        lp = psi.log2(abs(int(n)))
        with mpmath.workdps(30):
            if X > 0 and mpmath.log(X, 2) > 2 * lp and mpmath.log(abs(Y), 2) > 3 * lp:
                out.append(KhinchinWitness(int(n), X, Y))
    return out


def _nth_point_mp(orbit: Orbit, n: int):
    # no multiplier cap here: callers size the fixed-point width to n
    zc = orbit.zP.times(n)
    if zc.is_pole:
        return mpmath.inf, mpmath.nan
    with mpmath.workdps(40):
        return wp_mp(orbit.lattice, zc.signed_mp(), zc.half_shift)


def fast_approximable_orbit(curve: Curve, lattice: Lattice, psi, depth: int, max_bits: int = 1 << 16):
    """Orbit with t = alpha built so that x(q_k P) > psi(q_k)^2 at its convergents.

    alpha comes from :func:`diophantine.construct_fast_approximable` applied
    to c*psi with c = ceil(2*w1): then |q_k t - p_k| < 1/(c psi(q_k)) and
    x(q_k P) ~ 1/(w1 {q_k t})^2 > psi(q_k)^2.  Returns (orbit, expansion, c).
    """
    c = math.ceil(2 * lattice.omega1)
    cf = dio.construct_fast_approximable(dio.scaled_psi(dio.get_psi(psi), c), depth, max_bits)
    return orbit_from_fraction(curve, lattice, cf.value), cf, c


# -- tails --------------------------------------------------------------------


def tail_proportion(orbit: Orbit, n_max: int, X: float, threads: Optional[int] = 1) -> float:
    """Proportion of 0 < |k| < n_max with X(kP) > X (canonical), using X(-kP) = X(kP)."""
    if n_max < 2:
        return 0.0
    (c,) = orbit_scan(orbit, n_max - 1, [Counter(lambda b: b.X > X)], threads=threads)
    return c.result() / (n_max - 1)


def tail_proportion_y(orbit: Orbit, n_max: int, Y: float, threads: Optional[int] = 1) -> float:
    """Proportion of 0 < |k| < n_max with Y(kP) > Y (canonical).

    Y(-kP) = -Y(kP), so the two-sided count equals the count of |Y(kP)| > Y
    over positive k.
    """
    if n_max < 2:
        return 0.0
    (c,) = orbit_scan(orbit, n_max - 1, [Counter(lambda b: np.abs(b.Y) > Y)], threads=threads)
    return c.result() / (2 * (n_max - 1))


def tail_law_x(lattice: Lattice, X: float) -> float:
    """Leading term (2/w1) X^(-1/2) of the x-tail proportion."""
    return 2.0 / lattice.omega1 / math.sqrt(X)


def tail_law_y(lattice: Lattice, Y: float) -> float:
    """Leading term (2^(1/3)/w1) Y^(-1/3) of the y-tail proportion."""
    return 2.0 ** (1.0 / 3.0) / lattice.omega1 / Y ** (1.0 / 3.0)


# -- export -------------------------------------------------------------------


def sample_rows(orbit: Orbit, n_max: int, every: int = 1, threads: Optional[int] = 1):
    """(n, x, y) rows in input coordinates for n = every, 2*every, ... <= n_max."""
    from .accumulate import SampleRecorder

    (rec,) = orbit_scan(orbit, n_max, [SampleRecorder(every)], threads=threads)
    return rec.result()


def growth_summary(report: GrowthReport) -> dict:
    return {
        "omega1": report.omega1,
        "tail_constant": report.tail_constant,
        "tail_constant_note": "fitted Laurent-tail constant standing in for the O(n^-2) slack",
        "via_double": report.via_double,
        "witness_count": len(report.witnesses),
        "hurwitz_witnesses": report.hurwitz,
        "cross_checked": report.cross_checked,
        "scan_agrees": report.scan_agrees,
        "witnesses": [
            {"n": w.n, "X": w.X, "Y": w.Y, "bound_x": w.bound_x, "bound_y": w.bound_y,
             "hurwitz": w.hurwitz, "y_bound_holds": w.y_ok}
            for w in report.witnesses
        ],
    }
