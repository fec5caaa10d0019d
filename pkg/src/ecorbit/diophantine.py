"""Continued fractions and witness scans for small values of {n alpha}.

Here {r} is the distance from r to the nearest integer.  A real alpha is
carried as an exact rational ``value`` with an absolute error bound ``err``;
every reported quantity is checked against that error budget.

Two scanners are shipped for each witness search: a brute-force pass over
every n (vectorised fixed-point arithmetic) and, when psi(n) >= 2n, a
convergent-guided search.  By Legendre's theorem any n with
{n alpha} < 1/(2n) is a multiple m*q_k of a convergent denominator with
m^2 < 1/(2 q_k |q_k alpha - p_k|), so the guided search is complete.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence

import mpmath
import numpy as np

from . import fixedpoint as fx
from .errors import PrecisionError, ValidationError

FRAC_ERR_BUDGET = Fraction(1, 2 ** 60)
SCAN_CHUNK = 1 << 18
MAX_FULL_SCAN = 10 ** 9


@dataclass(frozen=True)
class HPReal:
    """Exact rational ``value`` known to within ``err``."""

    value: Fraction
    err: Fraction = Fraction(0)

    def __float__(self):
        return float(self.value)


def as_real(alpha, prec: Optional[int] = None) -> HPReal:
    """Wrap a Fraction, int, float, HPReal or mpf as :class:`HPReal`.

    mpf inputs are assumed correct to ``prec`` bits (default: mpmath's
    current precision); floats to 53 bits.
    """
    if isinstance(alpha, HPReal):
        return alpha
    if isinstance(alpha, (int, Fraction)):
        return HPReal(Fraction(alpha))
    if isinstance(alpha, float):
        v = Fraction(alpha)
        return HPReal(v, abs(v) * Fraction(1, 2 ** 53))
    if isinstance(alpha, mpmath.mpf):
        prec = prec or mpmath.mp.prec
        man, exp = alpha.man_exp
        v = Fraction(int(man)) * (Fraction(2) ** int(exp))
        mag = max(abs(v), Fraction(1, 2 ** 64))
        return HPReal(v, mag * Fraction(1, 2 ** prec))
    raise ValidationError(f"unsupported real type {type(alpha).__name__}")


def hp_constant(expr: Callable[[], "mpmath.mpf"], bits: int = 256) -> HPReal:
    """Evaluate an mpmath expression at ``bits`` of precision, e.g. ``lambda: mpmath.sqrt(2)``."""
    with mpmath.workprec(bits + 16):
        # mpf() also evaluates lazy constants such as mpmath.pi
        val = mpmath.mpf(expr())
    return as_real(val, prec=bits)


def golden(bits: int = 256) -> HPReal:
    return hp_constant(lambda: (1 + mpmath.sqrt(5)) / 2, bits)


def random_alpha(rng: np.random.Generator, bits: int = fx.BITS) -> HPReal:
    """Uniform random dyadic in (0, 1) with ``bits`` bits, treated as exact."""
    words = rng.integers(0, 2 ** 32, size=bits // 32, dtype=np.uint64)
    n = 0
    for w in words:
        n = (n << 32) | int(w)
    return HPReal(Fraction(n | 1, 1 << bits))


def _nearest_dist(v: Fraction) -> Fraction:
    r = v - math.floor(v)
    return min(r, 1 - r)


def frac_dist_exact(alpha, n: int) -> Fraction:
    """{n alpha} as an exact Fraction of the stored value, after the precision-budget check."""
    a = as_real(alpha)
    if abs(n) * a.err > FRAC_ERR_BUDGET:
        need = math.ceil(math.log2(max(abs(n), 1))) + 61 + max(0, math.ceil(math.log2(float(abs(a.value)) + 1)))
        raise PrecisionError(f"{{n alpha}} for n={n} needs about {need} bits of alpha", required_bits=need)
    return _nearest_dist(n * a.value)


def frac_dist(alpha, n: int) -> float:
    """{n alpha} in [0, 1/2] with absolute error below 2^-60."""
    return float(frac_dist_exact(alpha, n))


# -- continued fractions -------------------------------------------------------


@dataclass
class ContinuedFraction:
    quotients: List[int]
    p: List[int] = field(default_factory=list)
    q: List[int] = field(default_factory=list)
    terminated: bool = False
    truncated: bool = False

    def __post_init__(self):
        if not self.p:
            self.p, self.q = convergents(self.quotients)

    @property
    def value(self) -> Fraction:
        """The last convergent."""
        return _coprime_fraction(self.p[-1], self.q[-1])

    @property
    def guaranteed_q(self) -> List[int]:
        """Denominators q_k followed by a further quotient: the ones a construction's bound covers."""
        return list(self.q[:-1])

    def determinants_ok(self) -> bool:
        p, q = self.p, self.q
        return all(p[k] * q[k - 1] - p[k - 1] * q[k] == (-1) ** (k - 1) for k in range(1, len(p)))


def _coprime_fraction(p: int, q: int) -> Fraction:
    # consecutive convergents are coprime, so skip the (quadratic) gcd
    if hasattr(Fraction, "_from_coprime_ints"):
        return Fraction._from_coprime_ints(p, q)
    return Fraction(p, q, _normalize=False)


def convergents(quotients: Sequence[int]):
    p, q = [], []
    pm, qm, pmm, qmm = 1, 0, 0, 1
    for a in quotients:
        pk, qk = a * pm + pmm, a * qm + qmm
        p.append(pk)
        q.append(qk)
        pmm, qmm, pm, qm = pm, qm, pk, qk
    return p, q


def _cf_exact(v: Fraction, depth: int):
    out = []
    num, den = v.numerator, v.denominator
    while den and len(out) < depth:
        a, r = divmod(num, den)
        out.append(a)
        num, den = den, r
    return out, den == 0


def continued_fraction(alpha, depth: int, strict: bool = True) -> ContinuedFraction:
    """First ``depth`` partial quotients a0, a1, ... of alpha.

    Quotients are only reported while both ends of alpha's error interval
    agree.  Running out of precision before ``depth`` raises
    :class:`PrecisionError` when ``strict``; otherwise the valid prefix is
    returned with ``truncated`` set.
    """
    a = as_real(alpha)
    if a.err == 0:
        qs, term = _cf_exact(a.value, depth)
        return ContinuedFraction(qs, terminated=term)
    lo, lo_term = _cf_exact(a.value - a.err, depth + 1)
    hi, hi_term = _cf_exact(a.value + a.err, depth + 1)
    common = []
    for x, y in zip(lo, hi):
        if x != y:
            break
        common.append(x)
    # a shared final quotient of a terminated expansion is not trustworthy
    if (len(common) == len(lo) and lo_term) or (len(common) == len(hi) and hi_term):
        common = common[:-1]
    if len(common) >= depth:
        return ContinuedFraction(common[:depth])
    if strict:
        raise PrecisionError(f"alpha supports only {len(common)} partial quotients, {depth} requested")
    return ContinuedFraction(common, truncated=True)


# -- psi functions ---------------------------------------------------------------


@dataclass(frozen=True)
class Psi:
    """A positive nondecreasing psi with scalar, vectorised and log2 forms.

    ``legendre_from`` is an n0 with psi(n) >= 2n for every n >= n0 (None if no
    such n0 exists), which licenses the convergent-guided scanner beyond n0.
    """

    name: str
    scalar: Callable
    vec: Callable
    log2: Callable
    legendre_from: Optional[int]

    def __call__(self, n):
        return self.scalar(n)

    def below_inverse(self, d: Fraction, n: int) -> bool:
        """Whether d < 1/psi(n), decided without float overflow."""
        if d == 0:
            return True
        lg = self.log2(n)
        if lg < 900:
            val = self.scalar(n)
            if isinstance(val, int):
                return d * val < 1
            if isinstance(val, float):
                return d * Fraction(val) < 1
        with mpmath.workdps(60):
            dd = mpmath.mpf(d.numerator) / d.denominator
            return mpmath.log(dd, 2) + lg < 0


def _nlog2n(n):
    return n * math.log(n + 1) ** 2


PRESETS = {
    "linear": Psi("linear", lambda n: n, lambda n: np.asarray(n, float),
                  lambda n: math.log2(n), None),
    "nlog2n": Psi("nlog2n", _nlog2n, lambda n: np.asarray(n, float) * np.log(np.asarray(n, float) + 1) ** 2,
                  lambda n: math.log2(n) + 2 * math.log2(math.log(n + 1)), 4),
    "quadratic": Psi("quadratic", lambda n: n * n, lambda n: np.asarray(n, float) ** 2,
                     lambda n: 2 * math.log2(n), 2),
    "exponential": Psi("exponential", lambda n: 2 ** n, lambda n: np.exp2(np.asarray(n, float)),
                       lambda n: n, 1),
    "hurwitz": Psi("hurwitz", lambda n: math.sqrt(5) * n, lambda n: math.sqrt(5) * np.asarray(n, float),
                   lambda n: math.log2(math.sqrt(5) * n), 1),
}


def power_psi(exponent: float, scale: float = 1.0) -> Psi:
    """psi(n) = scale * n**exponent."""
    legendre = None
    if exponent > 1:
        legendre = max(1, math.ceil((2 / scale) ** (1 / (exponent - 1))))
    elif exponent == 1 and scale >= 2:
        legendre = 1
    return Psi(f"power({exponent})", lambda n: scale * float(n) ** exponent,
               lambda n: scale * np.asarray(n, float) ** exponent,
               lambda n: math.log2(scale) + exponent * math.log2(n), legendre)


def scaled_psi(psi: Psi, factor: float) -> Psi:
    """factor * psi; keeps exact integer values when ``factor`` is an integer."""
    if factor < 1:
        raise ValidationError("scale factor must be >= 1 to keep psi's Legendre range")
    if float(factor).is_integer():
        k = int(factor)
        scalar = lambda n: k * psi.scalar(n)
    else:
        scalar = lambda n: factor * psi.scalar(n)

    def log2(n):
        lg = psi.log2(n)
        if isinstance(lg, int) and lg.bit_length() > 1000:
            # too large for a float: add the offset at a precision that keeps it visible
            with mpmath.workprec(lg.bit_length() + 64):
                return mpmath.mpf(lg) + mpmath.log(factor, 2)
        return math.log2(factor) + lg

    return Psi(f"{factor}*{psi.name}", scalar, lambda n: factor * psi.vec(n), log2, psi.legendre_from)


def load_psi_table(path) -> Psi:
    """Step function psi from a CSV of ``n,psi`` rows (header optional), nondecreasing."""
    ns, vals = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                n, v = int(row[0]), float(row[1])
            except ValueError:
                continue
            ns.append(n)
            vals.append(v)
    if not ns:
        raise ValidationError(f"no (n, psi) rows in {path}")
    order = np.argsort(ns)
    ns_a = np.asarray(ns, np.int64)[order]
    vals_a = np.asarray(vals, float)[order]
    if ns_a[0] > 1 or np.any(np.diff(vals_a) < 0) or np.any(vals_a <= 0):
        raise ValidationError("psi table must start at n=1 and be positive and nondecreasing")

    def vec(n):
        idx = np.searchsorted(ns_a, np.asarray(n), side="right") - 1
        return vals_a[idx]

    return Psi(f"table({path})", lambda n: float(vec(np.array([n]))[0]), vec,
               lambda n: math.log2(float(vec(np.array([n]))[0])), None)


def get_psi(name) -> Psi:
    """Preset name, ``power:<p>``, a CSV path, or a :class:`Psi`."""
    if isinstance(name, Psi):
        return name
    if name in PRESETS:
        return PRESETS[name]
    if isinstance(name, str) and name.startswith("power:"):
        return power_psi(float(name.split(":", 1)[1]))
    if isinstance(name, str):
        return load_psi_table(name)
    raise ValidationError(f"unknown psi {name!r}")


# -- scanners ----------------------------------------------------------------


def _fixed(alpha: HPReal, N: int):
    if N * alpha.err > FRAC_ERR_BUDGET:
        raise PrecisionError(f"alpha is too imprecise for n up to {N}")
    return fx.to_fixed(alpha.value - math.floor(alpha.value))


def _full_scan(alpha: HPReal, psi: Psi, N: int, start: int = 1) -> List[int]:
    numer = _fixed(alpha, N)
    found = []
    for lo in range(start, N + 1, SCAN_CHUNK):
        ns = np.arange(lo, min(N, lo + SCAN_CHUNK - 1) + 1, dtype=np.int64)
        d = np.abs(fx.signed_fractions(numer, ns))
        with np.errstate(over="ignore"):
            cand = ns[d * psi.vec(ns) < 1 + 1e-9]
        # settle near-ties exactly
        for n in cand.tolist():
            if psi.below_inverse(frac_dist_exact(alpha, n), n):
                found.append(n)
    return found


def _guided_scan(alpha: HPReal, psi: Psi, N: int) -> List[int]:
    n0 = psi.legendre_from
    found = set(_full_scan(alpha, psi, min(N, n0 - 1))) if n0 > 1 else set()
    frac = alpha.value - math.floor(alpha.value)
    depth = 8
    while True:
        cf = continued_fraction(HPReal(frac, alpha.err), depth, strict=False)
        if cf.terminated or cf.truncated or cf.q[-1] > N:
            break
        depth *= 2
    if cf.truncated and cf.q[-1] <= N:
        raise PrecisionError("alpha's precision runs out before the convergent denominators pass N")
    for pk, qk in zip(cf.p, cf.q):
        if qk > N:
            break
        delta = abs(qk * frac - pk)
        m = 1
        while m * qk <= N and (delta == 0 or 2 * m * m * qk * delta < 1):
            n = m * qk
            if n >= n0 and psi.below_inverse(frac_dist_exact(alpha, n), n):
                found.add(n)
            m += 1
    return sorted(found)


def khinchin_scan(alpha, psi, N: int, method: str = "auto") -> List[int]:
    """All n <= N with {n alpha} < 1/psi(n).

    ``method`` is ``"scan"`` (every n), ``"convergents"`` (Legendre-guided) or
    ``"auto"`` (guided whenever psi allows it).
    """
    a = as_real(alpha)
    psi = get_psi(psi)
    if method == "auto":
        method = "convergents" if psi.legendre_from is not None else "scan"
    if method == "convergents":
        if psi.legendre_from is None:
            raise ValidationError(f"psi {psi.name} is not >= 2n eventually; use method='scan'")
        return _guided_scan(a, psi, N)
    if method == "scan":
        if N > MAX_FULL_SCAN:
            raise ValidationError(f"a full scan is limited to N <= {MAX_FULL_SCAN}")
        return _full_scan(a, psi, N)
    raise ValidationError(f"unknown scan method {method!r}")


def hurwitz_witnesses(alpha, N: int, method: str = "convergents") -> List[int]:
    """All n <= N with {n alpha} < 1/(sqrt(5) n)."""
    return khinchin_scan(alpha, PRESETS["hurwitz"], N, method)


def dirichlet_simultaneous(alphas: Sequence, N: int) -> List[int]:
    """All n <= N with {n alpha_j} < n^(-1/k) for every j (k = len(alphas))."""
    if len(alphas) < 1:
        raise ValidationError("need at least one alpha")
    reals = [as_real(a) for a in alphas]
    k = len(reals)
    numers = [_fixed(a, N) for a in reals]
    found = []
    for lo in range(1, N + 1, SCAN_CHUNK):
        ns = np.arange(lo, min(N, lo + SCAN_CHUNK - 1) + 1, dtype=np.int64)
        bound = ns.astype(float) ** (-1.0 / k)
        ok = np.ones(ns.shape, bool)
        for numer in numers:
            ok &= np.abs(fx.signed_fractions(numer, ns)) < bound * (1 + 1e-12)
        for n in ns[ok].tolist():
            # d < n^(-1/k)  <=>  d^k * n < 1
            if all(frac_dist_exact(a, n) ** k * n < 1 for a in reals):
                found.append(n)
    return found


def construct_fast_approximable(psi, depth: int, max_bits: int = 1 << 16, a0: int = 0) -> ContinuedFraction:
    """Continued fraction whose convergents satisfy {q_k alpha} < 1/psi(q_k).

    Partial quotients are a_{k+1} = ceil(psi(q_k)/q_k) + 1, which forces
    |q_k alpha - p_k| < 1/q_{k+1} < 1/psi(q_k).  Construction stops early,
    with ``truncated`` set, once psi(q_k) would need more than ``max_bits``.
    The bound is guaranteed for every index k that has a successor quotient.
    """
    psi = get_psi(psi)
    quotients = [a0]
    pm, qm, pmm, qmm = a0, 1, 1, 0
    truncated = False
    for _ in range(depth):
        if psi.log2(qm) > max_bits:
            truncated = True
            break
        val = psi(qm)
        val = Fraction(val) if not isinstance(val, mpmath.mpf) else as_real(val).value
        a = -(-val.numerator // (val.denominator * qm)) + 1
        quotients.append(a)
        pm, pmm = a * pm + pmm, pm
        qm, qmm = a * qm + qmm, qm
    return ContinuedFraction(quotients, truncated=truncated)


def weyl_sum(alpha, ell: int, N: int) -> complex:
    """(1/N) sum_{n=1}^N exp(2 pi i ell n alpha)."""
    if ell == 0:
        raise ValidationError("ell must be nonzero")
    a = as_real(alpha)
    numer = _fixed(HPReal(a.value * ell, a.err * abs(ell)), N)
    total = 0j
    for lo in range(1, N + 1, SCAN_CHUNK):
        ns = np.arange(lo, min(N, lo + SCAN_CHUNK - 1) + 1, dtype=np.int64)
        s = fx.signed_fractions(numer, ns)
        total += complex(np.exp(2j * np.pi * s).sum())
    return total / N


def weyl_bound(alpha, ell: int, N: int) -> float:
    """Geometric-sum bound 2 / (N |1 - exp(2 pi i ell alpha)|) on |weyl_sum|."""
    a = as_real(alpha)
    d = float(_nearest_dist(ell * a.value))
    denom = 2 * math.sin(math.pi * d)
    return math.inf if denom == 0 else 2.0 / (N * denom)


@dataclass
class MonteCarloResult:
    """Witness counts in (n_lo, n_hi] over random alphas, with the mean predicted by sum 2/psi(n)."""

    counts: List[int]
    expected: float

    @property
    def mean(self) -> float:
        return float(np.mean(self.counts))

    @property
    def stderr(self) -> float:
        return float(np.std(self.counts, ddof=1) / math.sqrt(len(self.counts))) if len(self.counts) > 1 else math.inf


def khinchin_monte_carlo(psi, n_lo: int, n_hi: int, samples: int = 100, seed: int = 0) -> MonteCarloResult:
    """Statistical smoke test: count witnesses n in (n_lo, n_hi] for ``samples`` random alphas.

    For uniform alpha, P({n alpha} < 1/psi(n)) = min(1, 2/psi(n)), so the mean
    count should track the sum of those probabilities.
    """
    psi = get_psi(psi)
    rng = np.random.default_rng(seed)
    counts = []
    for _ in range(samples):
        ns = khinchin_scan(random_alpha(rng), psi, n_hi)
        counts.append(sum(1 for n in ns if n > n_lo))
    expected = 0.0
    for lo in range(n_lo + 1, n_hi + 1, SCAN_CHUNK):
        ns = np.arange(lo, min(n_hi, lo + SCAN_CHUNK - 1) + 1)
        with np.errstate(over="ignore"):
            expected += float(np.minimum(1.0, 2.0 / psi.vec(ns)).sum())
    return MonteCarloResult(counts, expected)
