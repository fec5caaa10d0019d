"""Exact fixed-point arithmetic on fractional parts.

A real number t in [0, 1) is stored as an integer ``numer`` with
``t = numer / 2**bits``.  Multiples n*t (mod 1) are then exact integer
products reduced modulo ``2**bits``, so the only rounding in an orbit is the
final conversion of the signed fractional part to a float.

The vectorised path splits ``numer`` into 32-bit limbs held in uint64 numpy
arrays; with |n| < 2**32 every limb product fits in 64 bits.
"""
from __future__ import annotations

from fractions import Fraction

import mpmath
import numpy as np

from .errors import PrecisionError

BITS = 192
_MASK = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)
MAX_MULTIPLIER = 2 ** 32 - 1
BIG_FRACTION_BITS = 1 << 14


def to_fixed(value, bits: int = BITS) -> int:
    """Round ``value mod 1`` (Fraction, int, float or mpf) to ``bits`` fractional bits."""
    if isinstance(value, Fraction) and value.denominator.bit_length() > BIG_FRACTION_BITS:
        # CPython's big-int division is quadratic; mpmath's gmpy backend is not
        num, den = value.numerator, value.denominator
        with mpmath.workprec(bits + 64 + max(0, num.bit_length() - den.bit_length())):
            v = mpmath.mpf(num) / den
            n = int(mpmath.nint((v - mpmath.floor(v)) * mpmath.mpf(2) ** bits))
    elif isinstance(value, Fraction):
        scaled = value * (1 << bits)
        n = round(scaled)
    elif isinstance(value, int):
        n = 0
    elif isinstance(value, float):
        n = round(Fraction(value) * (1 << bits))
    else:
        with mpmath.workprec(bits + 64):
            n = int(mpmath.nint(mpmath.mpf(value) * mpmath.mpf(2) ** bits))
    return n % (1 << bits)


def signed_numer(numer: int, bits: int = BITS) -> int:
    """Representative of ``numer`` in ``[-2**(bits-1), 2**(bits-1))``."""
    return numer - (1 << bits) if numer >> (bits - 1) else numer


def scaled(numer: int, n: int, bits: int = BITS, offset: int = 0) -> int:
    """``(n*numer + offset) mod 2**bits``."""
    return (n * numer + offset) % (1 << bits)


def signed_fraction(numer: int, n: int = 1, bits: int = BITS, offset: int = 0) -> float:
    """Signed distance of ``n*t + offset`` to the nearest integer, as a correctly rounded float."""
    r = signed_numer(scaled(numer, n, bits, offset), bits)
    return r / (1 << bits)


def signed_fraction_mp(numer: int, n: int = 1, bits: int = BITS, offset: int = 0):
    """As :func:`signed_fraction` but returned as an mpf at the current mpmath precision."""
    r = signed_numer(scaled(numer, n, bits, offset), bits)
    return mpmath.ldexp(mpmath.mpf(r), -bits)


def _limbs(value: int, count: int) -> list:
    return [np.uint64((value >> (32 * i)) & 0xFFFFFFFF) for i in range(count)]


def _add_const(limbs, const_limbs):
    carry = np.zeros_like(limbs[0])
    out = []
    for a, b in zip(limbs, const_limbs):
        s = a + b + carry
        out.append(s & _MASK)
        carry = s >> _SHIFT
    return out


def _negate_where(limbs, mask):
    # two's complement on the rows selected by mask
    inv = [np.where(mask, l ^ _MASK, l) for l in limbs]
    carry = mask.astype(np.uint64)
    out = []
    for l in inv:
        s = l + carry
        out.append(s & _MASK)
        carry = s >> _SHIFT
    return out


def signed_fractions(numer: int, ns, bits: int = BITS, offset: int = 0) -> np.ndarray:
    """Vectorised :func:`signed_fraction` over an integer array ``ns``."""
    if bits % 32 or bits < 128:
        raise ValueError("bits must be a multiple of 32 and at least 128")
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size == 0:
        return np.zeros(0)
    mags = np.abs(ns)
    if int(mags.max()) > MAX_MULTIPLIER:
        raise PrecisionError("multiplier exceeds 2**32 - 1", required_bits=64)
    m = mags.astype(np.uint64)
    count = bits // 32
    carry = np.zeros_like(m)
    limbs = []
    for L in _limbs(numer, count):
        prod = m * L + carry
        limbs.append(prod & _MASK)
        carry = prod >> _SHIFT
    neg = ns < 0
    if neg.any():
        limbs = _negate_where(limbs, neg)
    if offset:
        limbs = _add_const(limbs, _limbs(offset % (1 << bits), count))
    top = (limbs[-1] >> np.uint64(31)).astype(bool)
    if top.any():
        limbs = _negate_where(limbs, top)
    # magnitude <= 1/2: the top four limbs carry 128 bits, ample for a double
    mag = np.zeros(ns.shape)
    for k in range(4):
        mag += limbs[count - 4 + k].astype(np.float64) * 2.0 ** (-32 * (4 - k))
    return np.where(top, -mag, mag)
