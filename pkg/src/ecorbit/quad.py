"""Integrals of the invariant differential dX/sqrt(4X^3 - g2 X - g3).

Endpoints that sit on a root of the cubic make the integrand blow up like
1/sqrt(X - e).  Each half of the interval is therefore integrated in the
variable u with X = end +/- u^2; when ``end`` is a root the factor u cancels
analytically and the integrand in u is smooth.
"""
from __future__ import annotations

import math

from scipy import integrate

from .curve import Curve

EPS = 1e-13


class CubicIntegrator:
    """Adaptive quadrature of dX / sqrt(|f(X)|) for a canonical cubic f."""

    def __init__(self, curve: Curve):
        self.curve = curve
        self.g2, self.g3 = curve.g2, curve.g3
        self.roots = curve.roots
        self.snap = 1e-12 * curve.scale

    def f(self, X):
        return 4 * X ** 3 - self.g2 * X - self.g3

    def reduced(self, X, root):
        """``f(X) / (X - root)`` evaluated without cancellation."""
        if len(self.roots) == 3:
            out = 4.0
            for e in self.roots:
                if e != root:
                    out *= X - e
            return out
        e = self.roots[0]
        return 4 * (X * X + e * X + e * e - self.g2 / 4)

    def snap_root(self, x):
        for e in self.roots:
            if abs(x - e) <= self.snap:
                return e
        return None

    def _half(self, end, length, direction, epsabs, epsrel):
        # integrate from ``end`` over ``length`` in X (direction +1 rightward, -1 leftward)
        root = self.snap_root(end)
        if root is not None:
            end = root

            def g(u):
                X = end + direction * u * u
                return 2.0 / math.sqrt(abs(self.reduced(X, root)))
        else:

            def g(u):
                X = end + direction * u * u
                return 2.0 * u / math.sqrt(abs(self.f(X)))

        upper = math.inf if math.isinf(length) else math.sqrt(length)
        val, _ = integrate.quad(g, 0.0, upper, epsabs=epsabs, epsrel=epsrel, limit=400)
        return val

    def integral(self, lo: float, hi: float, epsabs: float = EPS, epsrel: float = EPS) -> float:
        """``int_lo^hi dX / sqrt(|f(X)|)``; ``hi`` may be ``math.inf``."""
        if hi < lo:
            return -self.integral(hi, lo, epsabs, epsrel)
        if hi == lo:
            return 0.0
        if math.isinf(hi):
            return self._half(lo, math.inf, +1, epsabs, epsrel)
        mid = 0.5 * (lo + hi)
        return (self._half(lo, mid - lo, +1, epsabs, epsrel)
                + self._half(hi, hi - mid, -1, epsabs, epsrel))

    def arclength(self, lo: float, hi: float, y_scale: float = 1.0) -> float:
        """Arc length of one half (y >= 0) of ``y = sqrt(f(X)) / y_scale`` over [lo, hi]."""
        k = y_scale

        def piece(end, length, direction):
            root = self.snap_root(end)
            if root is not None:
                end = root

            def g(u):
                X = end + direction * u * u
                fp = 12 * X * X - self.g2
                if root is not None:
                    h = abs(self.reduced(X, root))
                    return math.sqrt(4 * u * u + fp * fp / (k * k * h))
                fx = abs(self.f(X))
                return 2 * u * math.sqrt(1 + fp * fp / (4 * k * k * fx))

            val, _ = integrate.quad(g, 0.0, math.sqrt(length), epsabs=1e-10, epsrel=1e-12, limit=400)
            return val

        mid = 0.5 * (lo + hi)
        return piece(lo, mid - lo, +1) + piece(hi, hi - mid, -1)
