"""Limiting distribution of the multiples nP and its empirical checks.

For P on the unbounded component, n z_P is equidistributed on the real row
[0, w1) of C/Lambda; for P on the bounded component, on both rows (measure
2 w1).  Pulling the uniform measure back through X = wp(z) gives the
x-density

    (2/w1) * eta * rho(X),   rho(X) = 1/sqrt(4X^3 - g2 X - g3),

in canonical coordinates, where eta is 1 (P and X both unbounded),
1/2 (P bounded) or 0 (P unbounded, X on the bounded oval).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .accumulate import CheckpointCounter, Histogram, OrbitBatch
from .curve import BOUNDED, UNBOUNDED, Curve, RealPoint, classify_component
from .errors import ValidationError
from .orbit import Orbit, orbit_batch, orbit_scan
from .periods import Lattice
from .quad import CubicIntegrator
from .weierstrass import TorusCoord, elliptic_log_xy, wp_arrays


@dataclass(frozen=True)
class XInterval:
    """x in [lo, hi] (canonical unless ``canonical`` is False), with optional sign of Y."""

    lo: float
    hi: float
    ysign: Optional[int] = None
    canonical: bool = True


@dataclass(frozen=True)
class Ball:
    """Euclidean eps-ball around (X0, Y0) in canonical coordinates."""

    X0: float
    Y0: float
    eps: float


@dataclass(frozen=True)
class Region:
    """Union of disjoint x-intervals and eps-balls; ``everything`` covers the whole curve."""

    intervals: Tuple[XInterval, ...] = ()
    balls: Tuple[Ball, ...] = ()
    everything: bool = False


EVERYTHING = Region(everything=True)


def eta(p_component: str, x_component: str) -> float:
    if p_component == BOUNDED:
        return 0.5
    return 1.0 if x_component == UNBOUNDED else 0.0


@dataclass(frozen=True)
class DensityModel:
    """x-density of {nP} for P on ``p_component``."""

    curve: Curve
    lattice: Lattice
    p_component: str
    integrator: CubicIntegrator = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.p_component not in (BOUNDED, UNBOUNDED):
            raise ValidationError(f"unknown component {self.p_component!r}")
        if self.p_component == BOUNDED and not self.curve.two_components:
            raise ValidationError("curve has no bounded component")
        if self.integrator is None:
            object.__setattr__(self, "integrator", CubicIntegrator(self.curve))

    @property
    def normalizer(self) -> float:
        """Measure of the torus rows visited: w1 or 2*w1."""
        return self.lattice.omega1 * (2.0 if self.p_component == BOUNDED else 1.0)

    def density(self, X: float) -> float:
        """x-density at canonical X (0 off the curve)."""
        comp = classify_component(self.curve, self.curve.conversion.x_from_canonical(X))
        if comp not in (BOUNDED, UNBOUNDED):
            return 0.0
        f = self.curve.cubic(X)
        if f <= 0:
            return math.inf
        return 2.0 * eta(self.p_component, comp) / (self.lattice.omega1 * math.sqrt(f))

    def support(self) -> List[Tuple[float, float]]:
        roots = self.curve.roots
        if self.p_component == BOUNDED:
            return [(roots[0], roots[1]), (roots[2], math.inf)]
        return [(roots[-1], math.inf)]

    def total_mass(self) -> float:
        """Quadrature of the density over its support; 1 up to quadrature error."""
        I = self.integrator
        w1 = self.lattice.omega1
        tot = 0.0
        for lo, hi in self.support():
            comp = BOUNDED if math.isfinite(hi) else UNBOUNDED
            tot += 2.0 * eta(self.p_component, comp) / w1 * I.integral(lo, hi)
        return tot


def make_model(orbit: Orbit) -> DensityModel:
    return DensityModel(orbit.curve, orbit.lattice, orbit.component)


@dataclass(frozen=True)
class CdfValue:
    value: float
    clamped: bool = False


def theoretical_x_cdf(model: DensityModel, X: float) -> CdfValue:
    """P(X(nP) <= X) under the limiting law, canonical X.

    x outside the closure of the support is clamped to the nearest end (or
    gap edge) and flagged.
    """
    I = model.integrator
    w1 = model.lattice.omega1
    roots = model.curve.roots
    top = roots[-1]
    if model.p_component == UNBOUNDED:
        if X < top:
            return CdfValue(0.0, clamped=True)
        if math.isinf(X):
            return CdfValue(1.0)
        return CdfValue(1.0 - 2.0 * I.integral(X, math.inf) / w1)
    e1, e2, e3 = roots
    if X < e1:
        return CdfValue(0.0, clamped=True)
    if X <= e2:
        return CdfValue(I.integral(e1, X) / w1)
    if X < e3:
        return CdfValue(0.5, clamped=True)
    if math.isinf(X):
        return CdfValue(1.0)
    return CdfValue(1.0 - I.integral(X, math.inf) / w1)


@dataclass(frozen=True)
class DensityEstimate:
    """Leading-order density with the size of the neglected O(eps^2) term in ``uncertainty``."""

    value: float
    uncertainty: float


def _row_speed(lattice: Lattice, X0: float, Y0: float) -> float:
    g2 = lattice.g2
    return math.hypot(Y0, 6 * X0 * X0 - g2 / 2)


def point_density(model: DensityModel, P0: RealPoint, eps: float, canonical: bool = False) -> DensityEstimate:
    """Density of n with nP within eps of P0: 2 eta eps / (w1 |gamma'(z0)|).

    ``|gamma'| = sqrt(Y0^2 + (6 X0^2 - g2/2)^2)`` is the speed of
    z -> (wp, wp').  P0 is in input coordinates unless ``canonical``.  The
    uncertainty is the gap to the exact ball measure from :func:`ball_measure`.
    """
    if P0.is_infinity:
        raise ValidationError("P0 must be finite")
    X0, Y0 = (P0.x, P0.y) if canonical else model.curve.conversion.to_canonical(P0.x, P0.y)
    comp = classify_component(model.curve, model.curve.conversion.x_from_canonical(X0))
    e = eta(model.p_component, comp)
    if e == 0.0:
        return DensityEstimate(0.0, 0.0)
    lead = 2.0 * e * eps / (model.lattice.omega1 * _row_speed(model.lattice, X0, Y0))
    exact = ball_measure(model, Ball(X0, Y0, eps))
    return DensityEstimate(lead, abs(exact - lead))


def _gamma(lattice, s, half):
    p, dp = wp_arrays(lattice, np.atleast_1d(s), np.atleast_1d(half))
    return float(p[0]), float(dp[0])


def ball_measure(model: DensityModel, ball: Ball) -> float:
    """Exact share of the torus rows mapped into ``ball``.

    The arc through the ball is followed in z from the centre's preimage in
    both directions until the distance reaches eps; only the arc through the
    centre is counted, so eps must be small against the curve's features.
    """
    lattice = model.lattice
    X0, Y0, eps = ball.X0, ball.Y0, ball.eps
    zc = elliptic_log_xy(lattice, X0, Y0)
    comp = BOUNDED if zc.half_shift else UNBOUNDED
    e = eta(model.p_component, comp)
    if e == 0.0:
        return 0.0
    s0 = zc.signed
    half = zc.half_shift

    def dist(s):
        X, Y = _gamma(lattice, s, half)
        return math.hypot(X - X0, Y - Y0) - eps

    w1 = lattice.omega1
    step0 = 0.5 * eps / (w1 * _row_speed(lattice, X0, Y0))
    ends = []
    for direction in (+1, -1):
        step = step0
        a = s0
        b = s0 + direction * step
        while dist(b) < 0:
            a, step = b, step * 2
            b = s0 + direction * step
            if step > 0.5:
                raise ValidationError("eps-ball swallows the whole row; use a smaller eps")
        ends.append(optimize.brentq(dist, min(a, b), max(a, b), xtol=1e-15, rtol=1e-14))
    span = abs(ends[0] - ends[1])
    # share of I_P: rows have length w1 in t-units of 1
    return span / (2.0 if model.p_component == BOUNDED else 1.0)


def _interval_mass(model: DensityModel, iv: XInterval) -> float:
    lo, hi = iv.lo, iv.hi
    if not iv.canonical:
        lo = model.curve.conversion.x_to_canonical(lo)
        hi = model.curve.conversion.x_to_canonical(hi)
    if hi <= lo:
        return 0.0
    mass = 0.0
    I = model.integrator
    w1 = model.lattice.omega1
    for a, b in model.support():
        comp = BOUNDED if math.isfinite(b) else UNBOUNDED
        e = eta(model.p_component, comp)
        lo2, hi2 = max(lo, a), min(hi, b)
        if e == 0.0 or hi2 <= lo2:
            continue
        mass += 2.0 * e / w1 * I.integral(lo2, hi2)
    return mass * (0.5 if iv.ysign else 1.0)


def region_density(model: DensityModel, U: Region) -> float:
    """Limiting share of n with nP in U (Lebesgue measure of the preimage in I_P, normalised)."""
    if not isinstance(U, Region):
        raise ValidationError("regions must be given as a Region of x-intervals and balls")
    if U.everything:
        return 1.0
    return (sum(_interval_mass(model, iv) for iv in U.intervals)
            + sum(ball_measure(model, b) for b in U.balls))


def region_mask(curve: Curve, U: Region, batch: OrbitBatch) -> np.ndarray:
    """Membership of each batch point in U."""
    if U.everything:
        return np.ones(len(batch), bool)
    m = np.zeros(len(batch), bool)
    for iv in U.intervals:
        X = batch.X if iv.canonical else batch.x
        hit = (X >= iv.lo) & (X <= iv.hi)
        if iv.ysign:
            hit &= np.sign(batch.Y) == np.sign(iv.ysign)
        m |= hit
    for b in U.balls:
        m |= np.hypot(batch.X - b.X0, batch.Y - b.Y0) < b.eps
    return m


# -- empirical comparison -------------------------------------------------------


def t_space_edges(model: DensityModel, bins: int) -> np.ndarray:
    """Canonical X edges of equal model mass: an even grid in s pushed through wp."""
    s = np.linspace(0.5, 0.0, bins + 1)[:-1]
    edges = [wp_arrays(model.lattice, s, np.zeros(s.shape, bool))[0]]
    if model.p_component == BOUNDED:
        sb = np.linspace(0.0, 0.5, bins + 1)
        edges.append(wp_arrays(model.lattice, sb, np.ones(sb.shape, bool))[0])
    return np.unique(np.concatenate(edges))


@dataclass
class CdfComparison:
    distance: float
    edges: np.ndarray
    empirical: np.ndarray
    model: np.ndarray
    n_max: int


def empirical_vs_theoretical(orbit: Orbit, model: DensityModel, n_max: int, bins: int = 200,
                             threads: Optional[int] = 1) -> CdfComparison:
    """Sup distance between the empirical x-CDF of n = 1..n_max and the model CDF.

    Edges come from an even grid in t-space pushed through wp, so every bin
    carries comparable model mass; the model CDF at each edge is computed
    independently by quadrature.
    """
    edges = t_space_edges(model, bins)
    (h,) = orbit_scan(orbit, n_max, [Histogram(edges, "X")], threads=threads)
    dist = h.result()
    emp = dist.cdf_at_edges()
    mod = np.array([theoretical_x_cdf(model, float(x)).value for x in edges])
    return CdfComparison(float(np.max(np.abs(emp - mod))), edges, emp, mod, n_max)


@dataclass
class ResidualSeries:
    rows: List[Tuple[int, float]]
    rho: float
    exponent: Optional[float]
    counts: List[Tuple[int, int]]


def fit_exponent(ns: Sequence[int], values: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log|v| against log n over the nonzero values."""
    ns = np.asarray(ns, float)
    v = np.abs(np.asarray(values, float))
    ok = (v > 0) & (ns > 0)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(ns[ok]), np.log(v[ok]), 1)[0])


def discrepancy_residual(orbit: Orbit, model: DensityModel, U: Region, n_grid: Sequence[int],
                         threads: Optional[int] = 1) -> ResidualSeries:
    """r(n) = #{1 <= k <= n : kP in U} - rho n at each n in ``n_grid``.

    The exponent is fitted to the running maximum of |r| so that isolated
    near-zero crossings do not dominate the fit.
    """
    grid = sorted(set(int(n) for n in n_grid))
    rho = region_density(model, U)
    (cc,) = orbit_scan(orbit, grid[-1], [CheckpointCounter(lambda b: region_mask(orbit.curve, U, b), grid)],
                       threads=threads)
    counts = cc.result()
    rows = [(n, c - rho * n) for n, c in counts]
    run = np.maximum.accumulate(np.abs([r for _, r in rows])) if rows else []
    return ResidualSeries(rows, rho, fit_exponent([n for n, _ in rows], run), counts)


# -- export -------------------------------------------------------------------


def density_table(model: DensityModel, xs: Sequence[float]) -> List[Tuple[float, float, float]]:
    """Rows (X, density, cdf) in canonical coordinates."""
    return [(float(x), model.density(float(x)), theoretical_x_cdf(model, float(x)).value) for x in xs]
