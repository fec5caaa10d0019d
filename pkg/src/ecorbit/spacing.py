"""Distribution of the gaps x(nP + Q) - x(nP).

Everything here works in short-form coordinates y^2 = x^3 + a x + b,
reached from any input form through the canonical model (x = X, y = Y/2).
Gaps in x are invariant under the x-shift of a long-form model, so the
results apply to the input curve unchanged.

By the chord law, x(P + Q) - x(P) = F(x_P) with

    F_sigma(x) = ((sigma sqrt(c(x)) - y_Q) / (x - x_Q))^2 - 2x - x_Q,
    c(x) = x^3 + a x + b,

and sigma the sign of y_P.  The gap density is the push-forward of the
x-density through both branches: sum over solutions of F_sigma = d of
rho(x)/|F_sigma'(x)|, rho = 1/sqrt(c).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize

from .accumulate import EmpiricalDistribution, exact_sum
from .curve import BOUNDED, UNBOUNDED, Curve, RealPoint
from .errors import ValidationError
from .orbit import Orbit, orbit_batch, orbit_scan
from .quad import CubicIntegrator
from .weierstrass import elliptic_log

BRANCHES = (1, -1)
CRITICAL_TOL = 1e-8


@dataclass(frozen=True)
class SpacingProblem:
    """Curve in short-form coordinates (a, b) and the fixed point Q = (xQ, yQ)."""

    curve: Curve
    a: float
    b: float
    xQ: float
    yQ: float

    def c(self, x):
        return x ** 3 + self.a * x + self.b

    @property
    def roots(self) -> tuple:
        return self.curve.roots


def make_problem(curve: Curve, Q: RealPoint) -> SpacingProblem:
    if Q.is_infinity:
        raise ValidationError("Q must be a finite point")
    X, Y = curve.conversion.to_canonical(Q.x, Q.y)
    a, b = (float(v) for v in curve.short_ab)
    return SpacingProblem(curve, a, b, float(X), float(Y) / 2)


def _short_from_canonical(X, Y):
    return X, Y / 2


def F_eval(problem: SpacingProblem, branch: int, x: float) -> float:
    """F_branch(x) in short coordinates; raises on x = xQ or c(x) < 0."""
    if branch not in BRANCHES:
        raise ValidationError("branch must be +1 or -1")
    c = problem.c(x)
    scale = max(1.0, abs(x)) ** 3
    if c < -1e-12 * scale:
        raise ValidationError(f"x = {x} is off the real curve")
    if x == problem.xQ:
        raise ValidationError("F is undefined at x = xQ")
    w = (branch * math.sqrt(max(c, 0.0)) - problem.yQ) / (x - problem.xQ)
    return w * w - 2 * x - problem.xQ


def F_values(problem: SpacingProblem, branch: int, x: np.ndarray) -> np.ndarray:
    """Vectorised F (nan off the curve and at xQ)."""
    x = np.asarray(x, float)
    c = problem.c(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = (branch * np.sqrt(c) - problem.yQ) / (x - problem.xQ)
        return w * w - 2 * x - problem.xQ


def F_prime(problem: SpacingProblem, branch: int, x: float) -> float:
    """Closed-form derivative 2 w w' - 2."""
    c = problem.c(x)
    sq = math.sqrt(c)
    u = branch * sq - problem.yQ
    v = x - problem.xQ
    du = branch * (3 * x * x + problem.a) / (2 * sq)
    w = u / v
    dw = (du * v - u) / (v * v)
    return 2 * w * dw - 2


def _polynomial(problem: SpacingProblem, d: float) -> np.ndarray:
    # R = c + yQ^2 - (x - xQ)^2 (2x + xQ + d),  R^2 - 4 yQ^2 c = 0
    P = np.polynomial.polynomial
    a, b, xQ, yQ = problem.a, problem.b, problem.xQ, problem.yQ
    c = np.array([b, a, 0.0, 1.0])
    sq = P.polymul([-xQ, 1.0], [-xQ, 1.0])
    R = P.polysub(P.polyadd(c, [yQ * yQ]), P.polymul(sq, [xQ + d, 2.0]))
    if yQ == 0:
        return R
    full = P.polysub(P.polymul(R, R), 4 * yQ * yQ * c)
    # x = xQ is always a double root; divide it out
    quot, _ = P.polydiv(full, sq)
    return quot


def _on_curve_x(problem, x):
    return problem.c(x) >= -1e-12 * max(1.0, abs(x)) ** 3


def _refine(problem, branch, x, d):
    """Newton on F - d from x, falling back to bisection in a small bracket."""
    g = lambda u: F_eval(problem, branch, u) - d
    try:
        for _ in range(8):
            if not _on_curve_x(problem, x) or x == problem.xQ:
                break
            fx = g(x)
            dfx = F_prime(problem, branch, x)
            if dfx == 0 or not math.isfinite(dfx):
                break
            step = fx / dfx
            x_new = x - step
            if not _on_curve_x(problem, x_new):
                break
            x = x_new
            if abs(step) <= 1e-15 * max(1.0, abs(x)):
                break
    except (ValueError, ZeroDivisionError):
        pass
    return x


def _accept(problem, branch, x, d) -> bool:
    if x == problem.xQ or not _on_curve_x(problem, x):
        return False
    try:
        val = F_eval(problem, branch, x)
    except ValidationError:
        return False
    return abs(val - d) < 1e-8 * max(1.0, abs(d))


def _bracket_fallback(problem, branch, x0, d):
    # bisection on F - d near a cubic root or xQ, where Newton is unreliable
    span = 1e-6 * max(1.0, abs(x0))
    lo, hi = x0 - span, x0 + span
    g = lambda u: F_eval(problem, branch, u) - d
    pts = np.linspace(lo, hi, 41)
    vals = []
    for p in pts:
        try:
            vals.append(g(p) if _on_curve_x(problem, p) and p != problem.xQ else math.nan)
        except ValidationError:
            vals.append(math.nan)
    for i in range(len(pts) - 1):
        if math.isfinite(vals[i]) and math.isfinite(vals[i + 1]) and vals[i] * vals[i + 1] <= 0:
            return optimize.brentq(g, pts[i], pts[i + 1], xtol=1e-15)
    return None


def solve_F_eq_d(problem: SpacingProblem, d: float) -> Tuple[List[float], List[float]]:
    """Real solutions of F_+(x) = d and F_-(x) = d, each sorted ascending."""
    coeffs = _polynomial(problem, d)
    roots = np.polynomial.polynomial.polyroots(coeffs)
    scale = max(1.0, float(np.max(np.abs(roots)))) if roots.size else 1.0
    real = sorted(float(r.real) for r in roots if abs(r.imag) <= 1e-6 * scale)
    out = {1: [], -1: []}
    special = list(problem.roots) + [problem.xQ]
    for x0 in real:
        for br in BRANCHES:
            x = x0
            if not _on_curve_x(problem, x):
                # a root just outside the real locus may be a tangency at a cubic root
                x = min(special, key=lambda e: abs(e - x0))
                if abs(x - x0) > 1e-6 * max(1.0, abs(x0)):
                    continue
            x = _refine(problem, br, x, d)
            if not _accept(problem, br, x, d):
                near = min(abs(x0 - e) for e in special) < 1e-9 * max(1.0, abs(x0)) * 1e3
                if near:
                    xb = _bracket_fallback(problem, br, x0, d)
                    if xb is None or not _accept(problem, br, xb, d):
                        continue
                    x = xb
                else:
                    continue
            if all(abs(x - y) > 1e-9 * max(1.0, abs(x)) for y in out[br]):
                out[br].append(x)
    return sorted(out[1]), sorted(out[-1])


def _component(problem: SpacingProblem, x: float) -> str:
    roots = problem.roots
    if len(roots) == 3 and x <= roots[1] + 1e-9 * max(1.0, abs(roots[1])):
        return BOUNDED
    return UNBOUNDED


@dataclass(frozen=True)
class SpacingDensity:
    value: float
    reliable: bool
    terms: int


def spacing_density(problem: SpacingProblem, p_component: str, d: float, star: bool = True) -> SpacingDensity:
    """f(d) = sum over solutions of rho(x)/|F'(x)| (unnormalised).

    With P unbounded and ``star`` set, solutions on the bounded oval are
    skipped, since the orbit never visits them.  Solutions where
    |F'| < 1e-8 make the value unreliable and are flagged.
    """
    plus, minus = solve_F_eq_d(problem, d)
    total, reliable, terms = 0.0, True, 0
    for br, xs in ((1, plus), (-1, minus)):
        for x in xs:
            if star and p_component == UNBOUNDED and _component(problem, x) == BOUNDED:
                continue
            c = problem.c(x)
            fp = abs(F_prime(problem, br, x))
            if fp < CRITICAL_TOL or c <= 0:
                reliable = False
                continue
            total += 1.0 / math.sqrt(c) / fp
            terms += 1
    return SpacingDensity(total, reliable, terms)


def density_normalizer(problem: SpacingProblem, orbit_or_omega1, p_component: str) -> float:
    """Factor turning f(d) into a probability density of the gap.

    Per branch the x-density is rho/(2 w1) (P unbounded) or rho/(4 w1)
    (P bounded, both torus rows).
    """
    w1 = orbit_or_omega1.lattice.omega1 if hasattr(orbit_or_omega1, "lattice") else float(orbit_or_omega1)
    return 1.0 / (2 * w1) if p_component == UNBOUNDED else 1.0 / (4 * w1)


def spacing_cdf(problem: SpacingProblem, omega1: float, p_component: str, d: float,
                star: bool = True) -> float:
    """Model probability that the gap is below d: the x-measure of {F_sigma < d}.

    The sublevel set of each branch is cut at the solutions of F = d, at
    xQ and at the ends of the real locus; each piece is tested at its
    midpoint and integrated with the root-aware quadrature.
    """
    integ = CubicIntegrator(problem.curve)
    roots = problem.roots
    if len(roots) == 3:
        comps = [(roots[0], roots[1], BOUNDED), (roots[2], math.inf, UNBOUNDED)]
    else:
        comps = [(roots[0], math.inf, UNBOUNDED)]
    if star and p_component == UNBOUNDED:
        comps = [c for c in comps if c[2] == UNBOUNDED]
    plus, minus = solve_F_eq_d(problem, d)
    weight = density_normalizer(problem, omega1, p_component)
    total = 0.0
    for br, sols in ((1, plus), (-1, minus)):
        for lo, hi, _ in comps:
            cuts = sorted({lo, hi, *[x for x in sols if lo < x < hi],
                           *([problem.xQ] if lo < problem.xQ < hi else [])})
            for a, b in zip(cuts[:-1], cuts[1:]):
                mid = 0.5 * (a + b) if math.isfinite(b) else a + max(1.0, abs(a))
                try:
                    below = F_eval(problem, br, mid) < d
                except ValidationError:
                    continue
                if below:
                    # rho dx in short x equals 2 dX / sqrt(f) in canonical X
                    total += 2.0 * integ.integral(a, b)
    return weight * total


def empirical_spacing(orbit: Orbit, Q: RealPoint, n_max: int, trim: float = 0.1, bins: int = 100,
                      threads: Optional[int] = 1) -> Tuple[EmpiricalDistribution, np.ndarray]:
    """Histogram of x(nP + Q) - x(nP), n = 1..n_max, over the central 1 - 2*trim of the mass.

    Returns the histogram (edges at the trim quantiles) and the raw gaps.
    """
    gaps = spacing_gaps(orbit, Q, n_max, threads=threads)
    if not 0 <= trim < 0.5:
        raise ValidationError("trim must be in [0, 1/2)")
    lo, hi = np.quantile(gaps, [trim, 1 - trim])
    dist = EmpiricalDistribution(np.linspace(lo, hi, bins + 1), trimmed=(trim, trim))
    dist.add(gaps)
    return dist, gaps


def spacing_gaps(orbit: Orbit, Q: RealPoint, n_max: int, threads: Optional[int] = 1) -> np.ndarray:
    """Raw gaps x(nP + Q) - x(nP) for n = 1..n_max (ordered by n)."""
    zQ = elliptic_log(orbit.curve, orbit.lattice, Q)

    class _Gaps:
        def __init__(self):
            self.parts = []

        def spawn(self):
            return _Gaps()

        def update(self, b):
            b2 = orbit_batch(orbit, b.n, zQ)
            self.parts.append((b.n[0], b2.X - b.X))

        def merge(self, other):
            self.parts.extend(other.parts)

        def result(self):
            self.parts.sort(key=lambda p: p[0])
            return np.concatenate([p[1] for p in self.parts]) if self.parts else np.zeros(0)

    (acc,) = orbit_scan(orbit, n_max, [_Gaps()], threads=threads)
    return acc.result()


@dataclass
class SpacingComparison:
    sup_error: float
    edges: np.ndarray
    empirical: np.ndarray
    model: np.ndarray


def compare_spacing(orbit: Orbit, Q: RealPoint, n_max: int, trim: float = 0.1, bins: int = 50,
                    star: bool = True, threads: Optional[int] = 1) -> SpacingComparison:
    """Empirical vs model gap density on the trimmed support, both at unit mass there.

    The model mass of each bin is a difference of :func:`spacing_cdf`;
    ``sup_error`` is max |empirical - model| over bins relative to the
    largest model bin density.
    """
    dist, _ = empirical_spacing(orbit, Q, n_max, trim, bins, threads)
    problem = make_problem(orbit.curve, Q)
    w1 = orbit.lattice.omega1
    cdf = np.array([spacing_cdf(problem, w1, orbit.component, float(e), star) for e in dist.edges])
    mass = np.diff(cdf)
    model = mass / (mass.sum() * dist.widths)
    emp = dist.density()
    return SpacingComparison(float(np.max(np.abs(emp - model)) / np.max(model)), dist.edges, emp, model)


# -- moments -------------------------------------------------------------------


@dataclass
class MomentRow:
    n: int
    Sx: Fraction
    Sy: Fraction

    def log_abs(self, which: str = "x") -> float:
        v = self.Sx if which == "x" else self.Sy
        if v == 0:
            return -math.inf
        return math.log(abs(v.numerator)) - math.log(v.denominator)


@dataclass
class MomentSums:
    rows: List[MomentRow]
    r: int
    overflowed: bool


def _power_sum(values: np.ndarray, r: int) -> Tuple[Fraction, bool]:
    with np.errstate(over="ignore", invalid="ignore"):
        p = values ** r
    ok = np.isfinite(p)
    total = exact_sum(p[ok])
    overflow = not ok.all()
    for v in values[~ok].tolist():
        total += Fraction(v) ** r
    return total, overflow


def moment_partial_sums(orbit: Orbit, Q: RealPoint, r: int, checkpoints: Sequence[int],
                        threads: Optional[int] = 1) -> MomentSums:
    """Exact running sums of (x(kP+Q) - x(kP))^r and (y(kP+Q) - y(kP))^r, k = 1..n.

    Sums are kept as exact rationals of the double-precision summands; any
    summand whose power overflows a double is raised to the power exactly
    instead and ``overflowed`` is set (use :meth:`MomentRow.log_abs`).
    """
    if r < 1:
        raise ValidationError("r must be a positive integer")
    cps = sorted(set(int(c) for c in checkpoints))
    zQ = elliptic_log(orbit.curve, orbit.lattice, Q)

    class _Moments:
        def __init__(self):
            self.sx = np.zeros(len(cps) + 1, dtype=object)
            self.sy = np.zeros(len(cps) + 1, dtype=object)
            self.sx[:] = Fraction(0)
            self.sy[:] = Fraction(0)
            self.overflow = False

        def spawn(self):
            return _Moments()

        def update(self, b):
            b2 = orbit_batch(orbit, b.n, zQ)
            dx = b2.x - b.x
            dy = b2.y - b.y
            idx = np.searchsorted(cps, b.n, side="left")
            for j in np.unique(idx).tolist():
                m = idx == j
                vx, ox = _power_sum(dx[m], r)
                vy, oy = _power_sum(dy[m], r)
                self.sx[j] += vx
                self.sy[j] += vy
                self.overflow |= ox or oy

        def merge(self, other):
            self.sx += other.sx
            self.sy += other.sy
            self.overflow |= other.overflow

    (acc,) = orbit_scan(orbit, cps[-1], [_Moments()], threads=threads)
    rows, cx, cy = [], Fraction(0), Fraction(0)
    for j, n in enumerate(cps):
        cx += acc.sx[j]
        cy += acc.sy[j]
        rows.append(MomentRow(n, cx, cy))
    return MomentSums(rows, r, acc.overflow)
