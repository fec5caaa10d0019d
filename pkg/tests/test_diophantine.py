import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ecorbit.diophantine import (MAX_FULL_SCAN, HPReal, PRESETS, construct_fast_approximable,
                                 continued_fraction, dirichlet_simultaneous, frac_dist, frac_dist_exact,
                                 get_psi, golden, hp_constant, hurwitz_witnesses, khinchin_monte_carlo,
                                 khinchin_scan, load_psi_table, random_alpha, weyl_bound, weyl_sum)
from ecorbit.errors import PrecisionError, ValidationError

SQRT2 = hp_constant(lambda: mpmath.sqrt(2))
SQRT3 = hp_constant(lambda: mpmath.sqrt(3))
PHI = golden()


def _fib(k):
    a, b = 1, 1
    out = []
    for _ in range(k):
        out.append(a)
        a, b = b, a + b
    return out


def test_frac_dist_examples():
    assert frac_dist(Fraction(1, 3), 3) == 0
    # 8 phi = 12.944..., distance to 13 from mpmath at 50 digits
    with mpmath.workdps(50):
        ref = float(13 - 8 * (1 + mpmath.sqrt(5)) / 2)
    assert frac_dist(PHI, 8) == pytest.approx(ref, abs=1e-17)
    assert round(frac_dist(PHI, 8), 4) == 0.0557


@given(st.integers(1, 10 ** 6), st.integers(-5, 5))
def test_frac_dist_integer_shift(n, k):
    d = frac_dist_exact(PHI, n)
    shifted = HPReal(PHI.value + k, PHI.err)
    assert frac_dist_exact(shifted, n) == d
    assert 0 <= d <= Fraction(1, 2)


def test_frac_dist_precision_budget():
    with pytest.raises(PrecisionError) as exc:
        frac_dist(math.sqrt(2), 10 ** 6)
    assert exc.value.required_bits > 53


def test_classical_continued_fractions():
    assert continued_fraction(PHI, 30).quotients == [1] * 30
    assert continued_fraction(SQRT2, 30).quotients == [1] + [2] * 29
    cf = continued_fraction(Fraction(415, 93), 20)
    assert cf.terminated and cf.quotients == [4, 2, 6, 7]
    assert cf.value == Fraction(415, 93)
    assert cf.determinants_ok()


def test_continued_fraction_precision_exhaustion():
    with pytest.raises(PrecisionError):
        continued_fraction(math.sqrt(2), 100)
    cf = continued_fraction(math.sqrt(2), 100, strict=False)
    assert cf.truncated and 10 < len(cf.quotients) < 40
    assert cf.quotients[1:] == [2] * (len(cf.quotients) - 1)


@given(st.integers(0, 2 ** 32))
def test_determinant_identity(seed):
    cf = continued_fraction(random_alpha(np.random.default_rng(seed)), 40, strict=False)
    assert cf.determinants_ok()


def test_hurwitz_golden():
    ws = hurwitz_witnesses(PHI, 10 ** 4)
    assert ws and set(ws) <= set(_fib(25))
    assert ws == hurwitz_witnesses(PHI, 10 ** 4, method="scan")
    assert ws == khinchin_scan(PHI, PRESETS["hurwitz"], 10 ** 4)


def test_hurwitz_sqrt2_contains_five():
    assert frac_dist(SQRT2, 5) < 1 / (math.sqrt(5) * 5)
    assert 5 in hurwitz_witnesses(SQRT2, 100)


@settings(max_examples=10)
@given(st.integers(0, 2 ** 32))
def test_guided_matches_full_scan(seed):
    alpha = random_alpha(np.random.default_rng(seed))
    for psi in ("hurwitz", "quadratic", "nlog2n"):
        assert khinchin_scan(alpha, psi, 10 ** 6, "scan") == khinchin_scan(alpha, psi, 10 ** 6, "convergents")


def test_three_consecutive_convergents():
    rng = np.random.default_rng(20)
    for _ in range(20):
        alpha = random_alpha(rng)
        cf = continued_fraction(alpha, 60, strict=False)
        qs = [q for q in cf.q if 1 < q <= 10 ** 12]
        ws = set(hurwitz_witnesses(alpha, qs[-1]))
        for k in range(len(qs) - 2):
            assert ws & set(qs[k:k + 3])


def test_scan_method_validation():
    with pytest.raises(ValidationError):
        khinchin_scan(PHI, "linear", 100, "convergents")
    with pytest.raises(ValidationError):
        khinchin_scan(PHI, "linear", MAX_FULL_SCAN + 1, "scan")
    with pytest.raises(ValidationError):
        khinchin_scan(PHI, "quadratic", 100, "bogus")


def test_dirichlet_simultaneous():
    cf = continued_fraction(SQRT2, 20)
    ws = set(dirichlet_simultaneous([SQRT2], 10 ** 5))
    assert {q for q in cf.q if q <= 10 ** 5} <= ws
    assert dirichlet_simultaneous([SQRT2, SQRT3], 10 ** 5)
    rng = np.random.default_rng(3)
    for _ in range(5):
        assert len(dirichlet_simultaneous([random_alpha(rng), random_alpha(rng)], 10 ** 5)) >= 2
    with pytest.raises(ValidationError):
        dirichlet_simultaneous([], 10)


def test_construct_quadratic_and_constant():
    cf = construct_fast_approximable("quadratic", 8)
    assert not cf.truncated
    alpha = HPReal(cf.value)
    for q in cf.guaranteed_q:
        assert frac_dist_exact(alpha, q) * q * q < 1
    const = construct_fast_approximable(get_psi("power:0"), 8)
    for q in const.guaranteed_q:
        assert frac_dist_exact(HPReal(const.value), q) < 1


def test_construct_exponential_truncates():
    cf = construct_fast_approximable("exponential", 6, max_bits=1 << 12)
    assert cf.truncated
    alpha = HPReal(cf.value)
    for q in cf.guaranteed_q:
        d = frac_dist_exact(alpha, q)
        assert d == 0 or d * (1 << q) < 1
    assert cf.determinants_ok()


def test_weyl_examples():
    assert abs(weyl_sum(Fraction(1, 2), 2, 1000)) == pytest.approx(1.0)
    s = weyl_sum(SQRT2, 1, 10 ** 5)
    assert abs(s) <= weyl_bound(SQRT2, 1, 10 ** 5)
    assert weyl_bound(SQRT2, 1, 10 ** 5) < 1e-4
    assert weyl_sum(SQRT2, -3, 5000) == pytest.approx(weyl_sum(SQRT2, 3, 5000).conjugate(), abs=1e-12)
    with pytest.raises(ValidationError):
        weyl_sum(SQRT2, 0, 10)


@settings(max_examples=20)
@given(st.integers(0, 2 ** 32), st.integers(1, 20), st.integers(1, 20000))
def test_weyl_bound_holds(seed, ell, N):
    alpha = random_alpha(np.random.default_rng(seed))
    assert abs(weyl_sum(alpha, ell, N)) <= weyl_bound(alpha, ell, N) * (1 + 1e-9)


def test_psi_table(tmp_path):
    path = tmp_path / "psi.csv"
    path.write_text("n,psi\n1,2\n10,30\n100,400\n")
    psi = load_psi_table(str(path))
    assert psi(5) == 2 and psi(10) == 30 and psi(10 ** 6) == 400
    assert get_psi(str(path)).name.startswith("table")
    bad = tmp_path / "bad.csv"
    bad.write_text("1,5\n2,3\n")
    with pytest.raises(ValidationError):
        load_psi_table(str(bad))


def test_monte_carlo_divergent_and_convergent():
    lin = khinchin_monte_carlo("linear", 10 ** 3, 10 ** 5, samples=100, seed=7)
    # every alpha keeps producing witnesses, at the rate sum 2/n predicts
    assert min(lin.counts) > 0
    assert abs(lin.mean - lin.expected) < 4 * lin.stderr
    for psi in ("nlog2n", "quadratic"):
        mc = khinchin_monte_carlo(psi, 10 ** 3, 10 ** 5, samples=100, seed=7)
        assert mc.mean < 1
        assert mc.mean <= mc.expected + 4 * math.sqrt(mc.expected / 100) + 0.05
