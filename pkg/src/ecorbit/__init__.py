"""Statistics of the multiples nP of a point on a real elliptic curve.

The modules build on each other in this order: ``curve`` (models, group law),
``periods`` (AGM lattice), ``weierstrass`` (wp on the torus and the elliptic
log), ``diophantine`` (fractional parts and continued fractions), ``orbit``
(streaming scans of nP), ``distribution`` and ``spacing`` (limiting laws),
``fruit`` (the E_N family) and ``cli``.
"""
from .curve import INFINITY, Curve, RealPoint, make_curve, parse_curve, parse_point
from .errors import PrecisionError, TorsionPointError, ValidationError
from .orbit import Orbit, make_orbit, nth_point, orbit_scan
from .periods import Lattice, compute_periods

__all__ = [
    "INFINITY", "Curve", "RealPoint", "make_curve", "parse_curve", "parse_point",
    "PrecisionError", "TorsionPointError", "ValidationError",
    "Orbit", "make_orbit", "nth_point", "orbit_scan", "Lattice", "compute_periods",
]
__version__ = "0.1.0"
