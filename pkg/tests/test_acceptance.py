"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line with the measured figures and the
wall time, then asserts.  Run just this file with

    pytest tests/test_acceptance.py -v -s
"""
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from ecorbit.curve import add_points, make_curve, multiples_exact
from ecorbit.diophantine import (HPReal, construct_fast_approximable, frac_dist_exact, get_psi,
                                 khinchin_monte_carlo)
from ecorbit.distribution import empirical_vs_theoretical, make_model
from ecorbit.errors import ValidationError
from ecorbit.fruit import arclengths, build_instance, conjecture_residual, solution_density
from ecorbit.orbit import (fast_approximable_orbit, growth_witnesses, khinchin_growth_scan,
                           make_orbit, nth_point, tail_law_x, tail_law_y, tail_proportion,
                           tail_proportion_y)
from ecorbit.periods import compute_periods, periods_by_quadrature
from ecorbit.spacing import F_values, compare_spacing, make_problem, moment_partial_sums, solve_F_eq_d
from ecorbit.weierstrass import TorusCoord, elliptic_log, torus_to_point

X3P1 = make_curve("short", 0, 1)
E37_SHORT = make_curve("short", -16, 16)
E37_LONG = make_curve("long", 0, 0, 1, -1, 0)


@contextmanager
def criterion(capsys, number, title, budget):
    """Time the block and print one PASS/FAIL line; ``detail`` is filled in by the block."""
    detail = {}
    t0 = time.perf_counter()
    ok = False
    try:
        yield detail
        ok = True
    finally:
        dt = time.perf_counter() - t0
        ok = ok and dt < budget
        parts = ", ".join(f"{k}={v}" for k, v in detail.items())
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {parts} ({dt:.1f} s, budget {budget} s)")
    assert dt < budget, f"runtime {dt:.1f} s exceeds {budget} s"


def test_01_fruit_densities(capsys):
    with criterion(capsys, 1, "solution densities N=4 and N=38", 2) as d:
        t0 = time.perf_counter()
        d4 = solution_density(build_instance(4))
        t4 = time.perf_counter() - t0
        t0 = time.perf_counter()
        d38 = solution_density(build_instance(38))
        t38 = time.perf_counter() - t0
        d.update(N4=f"{d4:.6f}", N38=f"{d38:.6f}", t4=f"{t4:.2f}s", t38=f"{t38:.2f}s")
        assert abs(d4 - 0.068) <= 0.002 and abs(d38 - 0.003) <= 0.001
        assert t4 < 1 and t38 < 1


def test_02_conjecture_sweep(capsys):
    with criterion(capsys, 2, "integral relation residual for accepted N <= 100", 10) as d:
        worst, accepted = 0.0, 0
        for N in range(1, 101):
            try:
                inst = build_instance(N)
            except ValidationError:
                continue
            accepted += 1
            worst = max(worst, conjecture_residual(inst))
        d.update(accepted=accepted, max_residual=f"{worst:.2e}")
        assert accepted == 99 and worst < 1e-8


def test_03_period_cross_validation(capsys):
    with criterion(capsys, 3, "AGM vs quadrature on 50 curves", 5) as d:
        rng = np.random.default_rng(50)
        curves = [make_curve("classical", 4, 0), X3P1, E37_SHORT]
        while len(curves) < 50:
            g2, g3 = rng.uniform(-10, 10, 2)
            if abs(g2 ** 3 - 27 * g3 ** 2) > 1e-2:
                curves.append(make_curve("classical", round(g2, 3), round(g3, 3)))
        worst = max(abs(compute_periods(E).omega1 - periods_by_quadrature(E)) / compute_periods(E).omega1
                    for E in curves)
        lem = compute_periods(curves[0]).omega1
        d.update(max_rel_diff=f"{worst:.1e}", lemniscatic=f"{lem:.7f}")
        assert worst < 1e-10 and abs(lem - 2.6220575) < 1e-7


def test_04_round_trip_and_homomorphism(capsys):
    with criterion(capsys, 4, "elliptic log round trip, addition, exact E37a multiples", 10) as d:
        rng = np.random.default_rng(4)
        E, L = E37_SHORT, compute_periods(E37_SHORT)
        rt = 0.0
        for _ in range(100):
            zc = TorusCoord.from_value(float(rng.uniform(0.01, 0.99)), bool(rng.integers(2)))
            back = elliptic_log(E, L, torus_to_point(E, L, zc))
            assert back.half_shift == zc.half_shift
            dist = abs(back.t - zc.t)
            rt = max(rt, min(dist, 1 - dist))
        hom = 0.0
        for _ in range(1000):
            z1 = TorusCoord.from_value(float(rng.uniform(0.02, 0.98)), bool(rng.integers(2)))
            z2 = TorusCoord.from_value(float(rng.uniform(0.02, 0.98)), bool(rng.integers(2)))
            z3 = z1 + z2
            if min(z3.t, 1 - z3.t) < 0.02:
                continue
            P3 = add_points(E, torus_to_point(E, L, z1), torus_to_point(E, L, z2))
            Z3 = torus_to_point(E, L, z3)
            hom = max(hom, abs(P3.x - Z3.x) / max(1.0, abs(Z3.x)))
        orbit = make_orbit(E37_LONG, E37_LONG.point(0, 0))
        ex = 0.0
        for n, m in enumerate(multiples_exact(E37_LONG, E37_LONG.rational_point(0, 0), 20), start=1):
            Q = nth_point(orbit, n)
            ex = max(ex, abs(Q.x - float(m.x)) / max(1.0, abs(float(m.x))),
                     abs(Q.y - float(m.y)) / max(1.0, abs(float(m.y))))
        d.update(round_trip=f"{rt:.1e}", addition=f"{hom:.1e}", exact_n20=f"{ex:.1e}")
        assert rt < 1e-10 and hom < 1e-8 and ex < 1e-8


def test_05_cdf_distance(capsys):
    with criterion(capsys, 5, "empirical vs model x-CDF at n_max=1e5", 30) as d:
        o1 = make_orbit(X3P1, X3P1.lift_x(-0.406, 1))
        o2 = make_orbit(E37_SHORT, E37_SHORT.point(0, 4))
        d1 = empirical_vs_theoretical(o1, make_model(o1), 10 ** 5).distance
        d2 = empirical_vs_theoretical(o2, make_model(o2), 10 ** 5).distance
        d.update(x3p1=f"{d1:.4f}", e37_bounded=f"{d2:.4f}")
        assert d1 < 0.01 and d2 < 0.01


def test_06_growth_witnesses(capsys):
    with criterion(capsys, 6, "quadratic growth witnesses for n <= 1e6", 60) as d:
        orbit = make_orbit(X3P1, X3P1.lift_x(-0.406, 1))
        rep = growth_witnesses(orbit, 10 ** 6, cross_check=False)
        d.update(witnesses=len(rep.witnesses), hurwitz=rep.hurwitz, C=f"{rep.tail_constant:.3g}")
        assert len(rep.witnesses) >= 3 and set(rep.hurwitz) <= set(rep.ns)


def test_07_tail_law(capsys):
    with criterion(capsys, 7, "x and y tail proportions at n_max=1e6", 60) as d:
        orbit = make_orbit(X3P1, X3P1.lift_x(-0.406, 1))
        L = orbit.lattice
        px, lx = tail_proportion(orbit, 10 ** 6, 100.0), tail_law_x(L, 100.0)
        py, ly = tail_proportion_y(orbit, 10 ** 6, 1000.0), tail_law_y(L, 1000.0)
        ex, ey = abs(px / lx - 1), abs(py / ly - 1)
        d.update(x_rel_err=f"{ex:.3f}", y_rel_err=f"{ey:.3f}")
        assert ex < 0.05 and ey < 0.05


def _grid_brackets(problem, d, step=1e-3, bound=1e3):
    xs = np.arange(-bound, bound, step)
    xs = xs[problem.c(xs) >= 0]
    out = {}
    for br in (1, -1):
        v = F_values(problem, br, xs) - d
        ok = np.isfinite(v[:-1]) & np.isfinite(v[1:]) & (np.diff(xs) < 1.5 * step)
        idx = np.nonzero(ok & (np.sign(v[:-1]) * np.sign(v[1:]) < 0))[0]
        out[br] = list(zip(xs[idx], xs[idx + 1]))
    return out


def test_08_spacing_law(capsys):
    with criterion(capsys, 8, "trimmed gap histogram vs density, root completeness", 120) as d:
        P1 = X3P1.lift_x(-0.406, 1)
        o1 = make_orbit(X3P1, P1)
        s1 = compare_spacing(o1, P1, 10 ** 6, trim=0.1).sup_error
        P2 = E37_SHORT.point(0, 4)
        o2 = make_orbit(E37_SHORT, P2)
        s2 = compare_spacing(o2, P2, 10 ** 6, trim=0.1).sup_error
        rng = np.random.default_rng(100)
        missed, brackets = 0, 0
        for i in range(100):
            E = (X3P1, E37_SHORT)[i % 2]
            if E.two_components and rng.random() < 0.3:
                x = rng.uniform(E.roots[0], E.roots[1])
            else:
                x = E.roots[-1] + rng.exponential(3.0)
            prob = make_problem(E, E.lift_x(x, rng.choice([-1, 1])))
            dval = float(rng.uniform(-20, 20))
            plus, minus = solve_F_eq_d(prob, dval)
            found = {1: plus, -1: minus}
            for br, bs in _grid_brackets(prob, dval).items():
                for a, b in bs:
                    brackets += 1
                    if not any(a - 1e-9 <= r <= b + 1e-9 for r in found[br]):
                        missed += 1
        d.update(x3p1_sup=f"{s1:.4f}", e37_sup=f"{s2:.4f}", grid_roots=brackets, missed=missed)
        assert s1 < 0.05 and s2 < 0.05 and missed == 0


def test_09_moment_growth(capsys):
    with criterion(capsys, 9, "moment sums: divergence and exponent bounds", 120) as d:
        rng = np.random.default_rng(2024)
        cps = [10 ** 4, 10 ** 5, 10 ** 6]
        growth, ratios = [], {1: [], 2: []}
        for _ in range(2):
            xs = rng.uniform(-0.9, 3, 2)
            P, Q = X3P1.lift_x(xs[0], 1), X3P1.lift_x(xs[1], -1)
            orbit = make_orbit(X3P1, P)
            for r in (1, 2):
                rows = moment_partial_sums(orbit, Q, r, cps).rows
                ratios[r].append(rows[-1].log_abs("x") / math.log(rows[-1].n))
                if r == 1:
                    a = math.exp(rows[0].log_abs("x")) / rows[0].n
                    b = math.exp(rows[-1].log_abs("x")) / rows[-1].n
                    growth.append(b / a)
        d.update(mean_abs_growth=[f"{g:.2f}" for g in growth],
                 r1_exponent=[f"{v:.2f}" for v in ratios[1]], r2_exponent=[f"{v:.2f}" for v in ratios[2]])
        assert all(g >= 1.1 for g in growth)
        assert all(v <= 2 * r + 1 + 0.2 for r in (1, 2) for v in ratios[r])


def test_10_fast_approximable_and_monte_carlo(capsys):
    with criterion(capsys, 10, "psi=2^n construction, induced orbit, Khinchin smoke tests", 60) as d:
        cf = construct_fast_approximable("exponential", 6)
        alpha = HPReal(cf.value)
        ok_alpha = all(frac_dist_exact(alpha, q) * (1 << q) < 1 for q in cf.guaranteed_q)
        orbit, cf2, c = fast_approximable_orbit(X3P1, compute_periods(X3P1), "exponential", 6, max_bits=1 << 23)
        qs = cf2.guaranteed_q
        hits = khinchin_growth_scan(orbit, "exponential", max(qs), candidates=qs)
        lin = khinchin_monte_carlo("linear", 10 ** 3, 10 ** 5, samples=100, seed=7)
        conv = khinchin_monte_carlo("nlog2n", 10 ** 3, 10 ** 5, samples=100, seed=7)
        d.update(alpha_q_bits=[q.bit_length() for q in cf.guaranteed_q], orbit_q_bits=[q.bit_length() for q in qs],
                 orbit_hits=len(hits), truncated=cf2.truncated,
                 linear_mean=f"{lin.mean:.2f}~{lin.expected:.2f}", nlog2n_mean=f"{conv.mean:.2f}")
        assert ok_alpha and len(cf.guaranteed_q) >= 3
        assert [w.n for w in hits] == qs
        assert min(lin.counts) > 0 and abs(lin.mean - lin.expected) < 4 * lin.stderr
        assert conv.mean < 1


def test_11_arclengths(capsys):
    with criterion(capsys, 11, "arclengths of the two intervals at N=1000", 5) as d:
        a1, a2 = arclengths(build_instance(1000))
        d.update(interval1_over_N2=f"{a1 / 1000 ** 2:.4f}", interval2=f"{a2:.4f}")
        assert 7.6 <= a1 / 1000 ** 2 <= 8.4 and 30.4 <= a2 <= 33.6
