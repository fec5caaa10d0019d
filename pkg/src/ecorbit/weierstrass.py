"""The Weierstrass function on the real rows of C/Lambda, and its inverse.

Positions are :class:`TorusCoord` values: a 192-bit fixed-point fraction
t = Re(z)/omega1 plus a flag for the omega2/2 offset that selects the
bounded row.  Near the pole (|z| below a quarter of omega1, or less on
elongated lattices) wp is summed from its Laurent series; elsewhere from the
real q-series

    wp(z) = (pi/w1)^2 [csc^2 v - 1/3 + 16 sum_n n q^n/(1-q^n) sin^2(n v)],  v = pi z / w1.

The bounded row is reached through the half-period identity
wp(u + w2/2) = e1 + (e1-e2)(e1-e3) / (wp(u) - e1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from . import fixedpoint as fx
from .curve import BOUNDED, Curve, RealPoint, UNBOUNDED
from .errors import AtInfinity, ValidationError
from .periods import PERIOD_DPS, Lattice

LAURENT_CROSSOVER = 0.25


@dataclass(frozen=True)
class TorusCoord:
    """z = t*omega1 (+ omega2/2 when ``half_shift``), with t = numer / 2**bits."""

    numer: int
    half_shift: bool = False
    bits: int = fx.BITS

    @classmethod
    def from_value(cls, t, half_shift: bool = False, bits: int = fx.BITS) -> "TorusCoord":
        return cls(fx.to_fixed(t, bits), bool(half_shift), bits)

    @property
    def t(self) -> float:
        return self.numer / (1 << self.bits)

    @property
    def signed(self) -> float:
        """t reduced to [-1/2, 1/2)."""
        return fx.signed_fraction(self.numer, 1, self.bits)

    def signed_mp(self):
        return fx.signed_fraction_mp(self.numer, 1, self.bits)

    @property
    def is_pole(self) -> bool:
        return self.numer == 0 and not self.half_shift

    def times(self, n: int) -> "TorusCoord":
        return TorusCoord(fx.scaled(self.numer, n, self.bits),
                          self.half_shift and n % 2 != 0, self.bits)

    def __neg__(self) -> "TorusCoord":
        return TorusCoord((-self.numer) % (1 << self.bits), self.half_shift, self.bits)

    def __add__(self, other: "TorusCoord") -> "TorusCoord":
        return torus_add(self, other)


def torus_add(a: TorusCoord, b: TorusCoord) -> TorusCoord:
    bits = max(a.bits, b.bits)
    na = a.numer << (bits - a.bits)
    nb = b.numer << (bits - b.bits)
    return TorusCoord((na + nb) % (1 << bits), a.half_shift != b.half_shift, bits)


# -- double precision ---------------------------------------------------------


@lru_cache(maxsize=64)
def _series_setup(lattice: Lattice):
    q = lattice.q
    n_terms = 1
    if q != 0:
        # |q|^n n / (1 - |q|) below 1e-18
        while abs(q) ** n_terms * n_terms * 16 > 1e-18 * (1 - abs(q)) and n_terms < 5000:
            n_terms += 1
    ns = np.arange(1, n_terms + 1, dtype=np.float64)
    qn = np.array([q ** int(n) for n in ns])
    a = ns * qn / (1.0 - qn)
    cross = LAURENT_CROSSOVER * min(1.0, lattice.shortest / lattice.omega1)
    coeffs = np.array(lattice.laurent_coeffs)
    return ns, a, cross, coeffs


def _laurent(lattice, z):
    """Remainders (wp - 1/z^2, wp' + 2/z^3) from the stored Laurent coefficients."""
    _, _, _, c = _series_setup(lattice)
    z2 = z * z
    rem = np.zeros_like(z)
    drem = np.zeros_like(z)
    for i in range(len(c) - 1, -1, -1):
        k = i + 2
        rem = rem * z2 + c[i]
        drem = drem * z2 + (2 * k - 2) * c[i]
    return rem * z2, drem * z


def _qseries(lattice, s):
    ns, a, _, _ = _series_setup(lattice)
    v = math.pi * s
    sv = np.sin(v)
    p = 1.0 / (sv * sv) - 1.0 / 3.0
    dp = -2.0 * np.cos(v) / sv ** 3
    for n, an in zip(ns, a):
        p += 16.0 * an * np.sin(n * v) ** 2
        dp += 16.0 * n * an * np.sin(2 * n * v)
    k = math.pi / lattice.omega1
    return k * k * p, k ** 3 * dp


def wp_arrays(lattice: Lattice, s, half=None):
    """Vectorised (wp, wp') at z = s*omega1 (+ omega2/2 where ``half``); s in [-1/2, 1/2].

    Values on the unbounded row at s == 0 are +inf / nan (the pole).
    """
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    half = np.zeros(s.shape, bool) if half is None else np.broadcast_to(np.asarray(half, bool), s.shape)
    _, _, cross, _ = _series_setup(lattice)
    p = np.empty_like(s)
    dp = np.empty_like(s)
    near = np.abs(s) < cross
    far = ~near
    w1 = lattice.omega1
    if far.any():
        p[far], dp[far] = _qseries(lattice, s[far])
    e1 = lattice.roots[0]
    if near.any():
        z = s[near] * w1
        hn = half[near]
        rem, drem = _laurent(lattice, z)
        pn = np.empty_like(z)
        dpn = np.empty_like(z)
        real = ~hn
        with np.errstate(divide="ignore", invalid="ignore"):
            zr = z[real]
            pn[real] = 1.0 / (zr * zr) + rem[real]
            dpn[real] = -2.0 / zr ** 3 + drem[real]
        if hn.any():
            # bounded row: z^2 (wp - e1) = A, so 1/(wp - e1) = z^2 / A
            e2, e3 = lattice.roots[1], lattice.roots[2]
            K = (e1 - e2) * (e1 - e3)
            zh = z[hn]
            z2 = zh * zh
            A = 1.0 + z2 * (rem[hn] - e1)
            pn[hn] = e1 + K * z2 / A
            dpn[hn] = -K * (-2.0 * zh + z2 * z2 * drem[hn]) / (A * A)
        p[near] = pn
        dp[near] = dpn
    far_half = far & half
    if far_half.any():
        e2, e3 = lattice.roots[1], lattice.roots[2]
        K = (e1 - e2) * (e1 - e3)
        d = p[far_half] - e1
        dp[far_half] = -K * dp[far_half] / (d * d)
        p[far_half] = e1 + K / d
    return p, dp


def _check_half(lattice: Lattice, zc: TorusCoord):
    if zc.half_shift and not lattice.rectangular:
        raise ValidationError("half-shifted torus coordinates need a rectangular lattice")


def wp(lattice: Lattice, zc: TorusCoord) -> float:
    """wp at the torus coordinate, canonical x."""
    _check_half(lattice, zc)
    if zc.is_pole:
        raise AtInfinity("wp has a pole at z = 0")
    p, _ = wp_arrays(lattice, [zc.signed], [zc.half_shift])
    return float(p[0])


def wp_prime(lattice: Lattice, zc: TorusCoord) -> float:
    _check_half(lattice, zc)
    if zc.is_pole:
        raise AtInfinity("wp' has a pole at z = 0")
    _, dp = wp_arrays(lattice, [zc.signed], [zc.half_shift])
    return float(dp[0])


def torus_to_point(curve: Curve, lattice: Lattice, zc: TorusCoord) -> RealPoint:
    """The curve point (input coordinates) parameterised by ``zc``."""
    if zc.is_pole:
        raise AtInfinity("torus coordinate is the identity")
    p, dp = wp_arrays(lattice, [zc.signed], [zc.half_shift])
    x, y = curve.conversion.from_canonical(float(p[0]), float(dp[0]))
    return RealPoint(x, y, BOUNDED if zc.half_shift else UNBOUNDED)


# -- high precision -----------------------------------------------------------


def _mp_terms(lattice: Lattice):
    q = abs(lattice.q_mp)
    if q == 0:
        return 1
    bits = mpmath.mp.prec + 20
    return int(bits * math.log(2) / -float(mpmath.log(q))) + 4


def wp_mp(lattice: Lattice, s, half: bool = False):
    """(wp, wp') at z = s*omega1 (+ omega2/2) in mpmath at the current precision.

    Uses the q-series everywhere; at high precision its cancellation near the
    pole costs only a few digits.  ``s`` must be nonzero on the unbounded row.
    """
    s = mpmath.mpf(s)
    w1 = lattice.omega1_mp
    q = lattice.q_mp
    v = mpmath.pi * s
    sv, cv = mpmath.sin(v), mpmath.cos(v)
    if sv == 0:
        if not half:
            raise AtInfinity("wp has a pole at z = 0")
        return lattice.roots_mp[0], mpmath.mpf(0)
    p = 1 / sv ** 2 - mpmath.mpf(1) / 3
    dp = -2 * cv / sv ** 3
    qn = mpmath.mpf(1)
    for n in range(1, _mp_terms(lattice) + 1):
        qn *= q
        a = n * qn / (1 - qn)
        p += 16 * a * mpmath.sin(n * v) ** 2
        dp += 16 * n * a * mpmath.sin(2 * n * v)
    k = mpmath.pi / w1
    p, dp = k * k * p, k ** 3 * dp
    if half:
        e1, e2, e3 = lattice.roots_mp
        K = (e1 - e2) * (e1 - e3)
        d = p - e1
        p, dp = e1 + K / d, -K * dp / (d * d)
    return p, dp


# -- elliptic logarithm --------------------------------------------------------


def _mp_reduced(lattice: Lattice, X, root_index):
    roots = lattice.roots_mp
    if len(roots) == 3:
        out = mpmath.mpf(4)
        for i, e in enumerate(roots):
            if i != root_index:
                out *= X - e
        return abs(out)
    e = roots[0]
    return 4 * (X * X + e * X + e * e - lattice.g2_mp / 4)


def _mp_from_root(lattice: Lattice, X, root_index, direction=1):
    """int dX/sqrt|f| from roots[root_index] to X (X on the side given by direction)."""
    e = lattice.roots_mp[root_index]
    top = mpmath.sqrt(abs(X - e))
    if top == 0:
        return mpmath.mpf(0)
    g = lambda u: 2 / mpmath.sqrt(_mp_reduced(lattice, e + direction * u * u, root_index))
    return mpmath.quad(g, [0, top])


def elliptic_log(curve: Curve, lattice: Lattice, P: RealPoint, polish: int = 2) -> TorusCoord:
    """Torus coordinate z_P with (wp(z_P), wp'(z_P)) = P in canonical coordinates."""
    if P.is_infinity:
        raise ValidationError("the point at infinity has no finite elliptic logarithm")
    X, Y = curve.conversion.to_canonical(P.x, P.y)
    return elliptic_log_xy(lattice, X, Y, polish)


def elliptic_log_xy(lattice: Lattice, X, Y, polish: int = 2) -> TorusCoord:
    """As :func:`elliptic_log` for canonical coordinates (X, Y)."""
    roots = lattice.roots_mp
    with mpmath.workdps(PERIOD_DPS):
        X = mpmath.mpf(X) if not isinstance(X, Fraction) else mpmath.mpf(X.numerator) / X.denominator
        w1 = lattice.omega1_mp
        half_w1 = w1 / 2
        tol = mpmath.mpf(10) ** -9 * max(1, abs(roots[-1]))
        if X >= roots[-1] - tol:
            X = max(X, roots[-1])
            # z in (0, w1/2] for Y < 0
            z = half_w1 - _mp_from_root(lattice, X, len(roots) - 1)
            t = z / w1 if Y <= 0 else 1 - z / w1
            half = False
        elif len(roots) == 3 and roots[0] - tol <= X <= roots[1] + tol:
            e1, e2 = roots[0], roots[1]
            X = min(max(X, e1), e2)
            if X - e1 <= e2 - X:
                s = _mp_from_root(lattice, X, 0, +1)
            else:
                s = half_w1 - _mp_from_root(lattice, X, 1, -1)
            t = s / w1 if Y >= 0 else 1 - s / w1
            half = True
        else:
            raise ValidationError(f"x = {float(X)} is off the real locus")
        t = t % 1
        for _ in range(polish):
            s_signed = t if t < 0.5 else t - 1
            if s_signed == 0 and not half:
                break
            p, dp = wp_mp(lattice, s_signed, half)
            if abs(dp) < mpmath.mpf(10) ** -20 * (1 + abs(p)) ** 1.5:
                break
            t = (t - (p - X) / dp / w1) % 1
        return TorusCoord.from_value(t, half)


# -- asymptotics -------------------------------------------------------------


def laurent_tail_constant(lattice: Lattice, t_max: float = 0.05, samples: int = 400) -> float:
    """Fitted C with |wp - 1/z^2| <= C t^2 and |wp' + 2/z^3| <= C t for 0 < t <= t_max.

    z = t*omega1 on the unbounded row.  The differences are taken from the
    Laurent remainder so no cancellation enters the fit.
    """
    ts = np.linspace(t_max / samples, t_max, samples)
    z = ts * lattice.omega1
    rem, drem = _laurent(lattice, z)
    # beyond the Laurent crossover compare against the q-series directly
    _, _, cross, _ = _series_setup(lattice)
    far = ts >= cross
    if far.any():
        p, dp = _qseries(lattice, ts[far])
        rem[far] = p - 1 / z[far] ** 2
        drem[far] = dp + 2 / z[far] ** 3
    cx = np.max(np.abs(rem) / ts ** 2)
    cy = np.max(np.abs(drem) / ts)
    return 1.05 * float(max(cx, cy)) + 1e-12
