"""Real elliptic curves, their components, and the chord-tangent group law.

Every curve is stored canonically as ``Y^2 = 4X^3 - g2 X - g3``.  The user's
input model (classical, short or long Weierstrass form) is kept alongside an
affine :class:`Conversion` so that results can be reported back in the
coordinates the user typed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence, Union

import mpmath

from .errors import SingularCurveError, ValidationError

Number = Union[int, float, Fraction, str]

BOUNDED = "bounded"
UNBOUNDED = "unbounded"
OFF_CURVE = "off-curve"

FORMS = ("classical", "short", "long")
_ARITY = {"classical": 2, "short": 2, "long": 5}


def to_fraction(value: Number) -> Fraction:
    """Exact rational value of an int, float, Fraction or decimal/``p/q`` string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError("booleans are not coefficients")
    if isinstance(value, (int, float)):
        if isinstance(value, float) and not math.isfinite(value):
            raise ValidationError(f"non-finite coefficient {value!r}")
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse number {value!r}") from exc
    # mpmath mpf and numpy scalars
    try:
        return Fraction(float(value))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"unsupported number type {type(value).__name__}") from exc


@dataclass(frozen=True)
class Conversion:
    """Affine map ``X = x + shift``, ``Y = yscale*y + a1*x + a3`` to canonical coordinates."""

    shift: Fraction = Fraction(0)
    yscale: Fraction = Fraction(1)
    a1: Fraction = Fraction(0)
    a3: Fraction = Fraction(0)

    @cached_property
    def _floats(self):
        return float(self.shift), float(self.yscale), float(self.a1), float(self.a3)

    def to_canonical(self, x, y):
        if isinstance(x, Fraction) and isinstance(y, Fraction):
            return x + self.shift, self.yscale * y + self.a1 * x + self.a3
        s, k, a1, a3 = self._floats
        return x + s, k * y + a1 * x + a3

    def from_canonical(self, X, Y):
        if isinstance(X, Fraction) and isinstance(Y, Fraction):
            x = X - self.shift
            return x, (Y - self.a1 * x - self.a3) / self.yscale
        s, k, a1, a3 = self._floats
        x = X - s
        return x, (Y - a1 * x - a3) / k

    def x_to_canonical(self, x):
        return x + (self.shift if isinstance(x, Fraction) else self._floats[0])

    def x_from_canonical(self, X):
        return X - (self.shift if isinstance(X, Fraction) else self._floats[0])


@dataclass(frozen=True)
class RealPoint:
    """Affine point in input-form coordinates, or the point at infinity (x = y = None)."""

    x: Optional[float]
    y: Optional[float]
    component: str = UNBOUNDED

    @property
    def is_infinity(self) -> bool:
        return self.x is None


INFINITY = RealPoint(None, None, UNBOUNDED)


@dataclass(frozen=True)
class RationalPoint:
    x: Optional[Fraction]
    y: Optional[Fraction]

    @property
    def is_infinity(self) -> bool:
        return self.x is None


RATIONAL_INFINITY = RationalPoint(None, None)


@dataclass(frozen=True)
class Curve:
    form: str
    coeffs: tuple
    g2_exact: Fraction
    g3_exact: Fraction
    conversion: Conversion
    rational: bool

    @property
    def g2(self) -> float:
        return float(self.g2_exact)

    @property
    def g3(self) -> float:
        return float(self.g3_exact)

    @cached_property
    def discriminant_exact(self) -> Fraction:
        return self.g2_exact ** 3 - 27 * self.g3_exact ** 2

    @property
    def discriminant(self) -> float:
        return float(self.discriminant_exact)

    @property
    def two_components(self) -> bool:
        return self.discriminant_exact > 0

    @cached_property
    def roots(self) -> tuple:
        return tuple(real_roots(self))

    @cached_property
    def scale(self) -> float:
        """Typical magnitude of the root configuration, used for tolerances."""
        return max(1.0, max(abs(e) for e in self.roots), abs(self.g2) ** 0.5, abs(self.g3) ** (1 / 3))

    def cubic(self, X):
        """``4X^3 - g2 X - g3`` in canonical coordinates."""
        return 4 * X ** 3 - self.g2 * X - self.g3

    @property
    def short_ab(self) -> tuple:
        """Coefficients (a, b) of the short model ``y^2 = x^3 + ax + b`` with x = X, Y = 2y."""
        return -self.g2_exact / 4, -self.g3_exact / 4

    def __str__(self):
        return f"{self.form}:" + ",".join(str(c) for c in self.coeffs)

    # -- points ---------------------------------------------------------

    def point(self, x, y, rel_tol: float = 1e-9) -> RealPoint:
        """Validated :class:`RealPoint` in input coordinates."""
        x, y = float(x), float(y)
        X, Y = self.conversion.to_canonical(x, y)
        rhs = self.cubic(X)
        scale = max(Y * Y, abs(4 * X ** 3), abs(self.g2 * X), abs(self.g3), 1e-300)
        if abs(Y * Y - rhs) > rel_tol * scale:
            raise ValidationError(f"point ({x}, {y}) is not on {self}")
        return RealPoint(x, y, component_of(self, x))

    def lift_x(self, x, sign: int = 1) -> RealPoint:
        """The point with the given input x-coordinate and sign of canonical Y."""
        X = self.conversion.x_to_canonical(float(x))
        rhs = self.cubic(X)
        if rhs < 0:
            if rhs > -1e-12 * self.scale ** 3:
                rhs = 0.0
            else:
                raise ValidationError(f"x = {x} is not the x-coordinate of a real point")
        Y = math.copysign(math.sqrt(rhs), sign)
        xi, yi = self.conversion.from_canonical(X, Y)
        return RealPoint(xi, yi, component_of(self, xi))

    def rational_point(self, x: Number, y: Number) -> RationalPoint:
        if not self.rational:
            raise ValidationError("exact points need a curve with rational input coefficients")
        x, y = to_fraction(x), to_fraction(y)
        X, Y = self.conversion.to_canonical(x, y)
        if Y * Y != 4 * X ** 3 - self.g2_exact * X - self.g3_exact:
            raise ValidationError(f"({x}, {y}) is not a rational point of {self}")
        return RationalPoint(x, y)

    def to_real(self, P: RationalPoint) -> RealPoint:
        if P.is_infinity:
            return INFINITY
        return self.point(float(P.x), float(P.y))

    def negate(self, P: RealPoint) -> RealPoint:
        if P.is_infinity:
            return P
        X, Y = self.conversion.to_canonical(P.x, P.y)
        x, y = self.conversion.from_canonical(X, -Y)
        return RealPoint(x, y, P.component)


def make_curve(form: str, *coeffs: Number) -> Curve:
    """Build a curve from classical ``(g2, g3)``, short ``(a, b)`` or long ``(a1, a2, a3, a4, a6)``."""
    if form not in FORMS:
        raise ValidationError(f"unknown curve form {form!r}; expected one of {FORMS}")
    if len(coeffs) != _ARITY[form]:
        raise ValidationError(f"{form} form takes {_ARITY[form]} coefficients, got {len(coeffs)}")
    rational = all(isinstance(c, (int, Fraction, str)) and not isinstance(c, bool) for c in coeffs)
    cs = tuple(to_fraction(c) for c in coeffs)
    if form == "classical":
        g2, g3 = cs
        conv = Conversion()
    else:
        if form == "short":
            a1 = a2 = a3 = Fraction(0)
            a4, a6 = cs
        else:
            a1, a2, a3, a4, a6 = cs
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        c4 = b2 * b2 - 24 * b4
        c6 = -b2 ** 3 + 36 * b2 * b4 - 216 * b6
        g2, g3 = c4 / 12, c6 / 216
        conv = Conversion(shift=b2 / 12, yscale=Fraction(2), a1=a1, a3=a3)
    curve = Curve(form, cs, g2, g3, conv, rational)
    if curve.discriminant_exact == 0:
        raise SingularCurveError(curve.discriminant)
    return curve


def parse_curve(text: str) -> Curve:
    """Parse ``short:a,b``, ``classical:g2,g3`` or ``long:a1,a2,a3,a4,a6``."""
    form, sep, rest = text.partition(":")
    if not sep:
        raise ValidationError(f"curve {text!r} lacks a 'form:' prefix")
    parts = [p for p in rest.split(",")]
    return make_curve(form.strip().lower(), *(p.strip() for p in parts))


def parse_point(curve: Curve, text: str) -> RealPoint:
    """``x,y`` for an explicit point or ``x:+`` / ``x:-`` to lift an x-coordinate."""
    text = text.strip()
    if text.lower() in ("inf", "infinity", "o"):
        return INFINITY
    if ":" in text:
        xs, sign = text.rsplit(":", 1)
        if sign.strip() not in ("+", "-"):
            raise ValidationError(f"point lift sign must be + or -, got {sign!r}")
        return curve.lift_x(float(to_fraction(xs)), 1 if sign.strip() == "+" else -1)
    parts = text.split(",")
    if len(parts) != 2:
        raise ValidationError(f"point {text!r} must be 'x,y' or 'x:+'")
    return curve.point(float(to_fraction(parts[0])), float(to_fraction(parts[1])))


# -- roots and components -------------------------------------------------


def _cbrt(v: float) -> float:
    return math.copysign(abs(v) ** (1.0 / 3.0), v)


ROOT_DPS = 50


def cubic_roots(g2, g3, three_real: bool, lib=math):
    """Closed-form real roots of ``4x^3 - g2 x - g3``, ascending.

    ``lib`` supplies sqrt/cos/acos/pi/cbrt so the same formulas serve floats
    (``math``) and ``mpmath`` numbers.
    """
    cbrt = getattr(lib, "cbrt", _cbrt)
    p, q = -g2 / 4, -g3 / 4
    if three_real:
        m = 2 * lib.sqrt(-p / 3)
        arg = (3 * q / (2 * p)) * lib.sqrt(-3 / p)
        arg = max(min(arg, 1), -1)
        theta = lib.acos(arg) / 3
        roots = [m * lib.cos(theta - 2 * lib.pi * k / 3) for k in range(3)]
    else:
        d = q * q / 4 + p ** 3 / 27
        sd = lib.sqrt(d)
        a = -cbrt(abs(q) / 2 + sd) if q >= 0 else cbrt(abs(q) / 2 + sd)
        b = -p / (3 * a) if a != 0 else 0
        roots = [a + b]
    polished = []
    for e in roots:
        fp = 12 * e * e - g2
        if fp != 0:
            e = e - (4 * e ** 3 - g2 * e - g3) / fp
        polished.append(e)
    return sorted(polished)


def real_roots(curve: Curve) -> list:
    """Real roots of ``4x^3 - g2 x - g3`` (canonical x), ascending; 1 or 3 of them.

    Solved from the exact invariants at ROOT_DPS digits, which keeps nearly
    coincident roots apart.
    """
    g2, g3 = curve.g2_exact, curve.g3_exact
    with mpmath.workdps(ROOT_DPS):
        roots = cubic_roots(mpmath.mpf(g2.numerator) / g2.denominator,
                            mpmath.mpf(g3.numerator) / g3.denominator, curve.two_components, lib=mpmath)
        return [float(e) for e in roots]


def classify_component(curve: Curve, x) -> str:
    """Component of the real locus above input x-coordinate ``x``.

    Points within 1e-9 (scaled) of a root are snapped to that root's
    component, with ties broken toward the bounded oval.
    """
    X = curve.conversion.x_to_canonical(float(x))
    roots = curve.roots
    tol = 1e-9 * curve.scale
    if len(roots) == 3:
        e1, e2, e3 = roots
        if e1 - tol <= X <= e2 + tol:
            return BOUNDED
        if X >= e3 - tol:
            return UNBOUNDED
        return OFF_CURVE
    return UNBOUNDED if X >= roots[0] - tol else OFF_CURVE


def component_of(curve: Curve, x) -> str:
    """Like :func:`classify_component` but for points known to lie on the curve."""
    comp = classify_component(curve, x)
    if comp != OFF_CURVE:
        return comp
    X = curve.conversion.x_to_canonical(float(x))
    return UNBOUNDED if X >= curve.roots[-1] else BOUNDED


# -- group law --------------------------------------------------------------


def _canonical_add(X1, Y1, X2, Y2, g2, same):
    if same:
        lam = (12 * X1 * X1 - g2) / (2 * Y1)
    else:
        lam = (Y2 - Y1) / (X2 - X1)
    X3 = lam * lam / 4 - X1 - X2
    Y3 = -(Y1 + lam * (X3 - X1))
    return X3, Y3


def add_points(curve: Curve, P: RealPoint, Q: RealPoint) -> RealPoint:
    """Chord-tangent sum in floating point (input coordinates in and out)."""
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P
    conv = curve.conversion
    X1, Y1 = conv.to_canonical(P.x, P.y)
    X2, Y2 = conv.to_canonical(Q.x, Q.y)
    tol = 1e-12 * curve.scale
    ytol = 1e-12 * max(1.0, abs(Y1), abs(Y2))
    if abs(X1 - X2) <= tol * max(1.0, abs(X1)):
        if abs(Y1 + Y2) <= ytol:
            return INFINITY
        same = True
    else:
        same = False
    X3, Y3 = _canonical_add(X1, Y1, X2, Y2, curve.g2, same)
    x, y = conv.from_canonical(X3, Y3)
    return RealPoint(x, y, component_of(curve, x))


def add_points_exact(curve: Curve, P: RationalPoint, Q: RationalPoint) -> RationalPoint:
    """Chord-tangent sum over the rationals; the exact oracle for float paths."""
    if not curve.rational:
        raise ValidationError("exact arithmetic requires rational input coefficients")
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P
    conv = curve.conversion
    X1, Y1 = conv.to_canonical(P.x, P.y)
    X2, Y2 = conv.to_canonical(Q.x, Q.y)
    if X1 == X2:
        if Y1 == -Y2:
            return RATIONAL_INFINITY
        same = True
    else:
        same = False
    X3, Y3 = _canonical_add(X1, Y1, X2, Y2, curve.g2_exact, same)
    x, y = conv.from_canonical(X3, Y3)
    return RationalPoint(x, y)


def negate_exact(curve: Curve, P: RationalPoint) -> RationalPoint:
    if P.is_infinity:
        return P
    X, Y = curve.conversion.to_canonical(P.x, P.y)
    x, y = curve.conversion.from_canonical(X, -Y)
    return RationalPoint(x, y)


def multiples_exact(curve: Curve, P: RationalPoint, count: int) -> list:
    """``[P, 2P, ..., count*P]`` by repeated exact addition."""
    out = []
    acc = RATIONAL_INFINITY
    for _ in range(count):
        acc = add_points_exact(curve, acc, P)
        out.append(acc)
    return out


def on_curve_exact(curve: Curve, P: RationalPoint) -> bool:
    if P.is_infinity:
        return True
    X, Y = curve.conversion.to_canonical(P.x, P.y)
    return Y * Y == 4 * X ** 3 - curve.g2_exact * X - curve.g3_exact


def sample_points(curve: Curve, xs: Sequence[float]) -> list:
    """Points above each canonical x in ``xs`` (positive Y), skipping off-curve values."""
    out = []
    for X in xs:
        if curve.cubic(X) >= 0:
            out.append(curve.lift_x(curve.conversion.x_from_canonical(X), 1))
    return out
