"""Command-line front end: ``ecorbit <command> [options]``.

Series go out as CSV with a one-line header, scalar reports as JSON.  Exit
codes: 0 success, 2 invalid input, 3 precision budget exceeded.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from typing import List, Optional, Sequence

import mpmath
import numpy as np

from . import diophantine as dio
from . import fruit as fr
from .curve import parse_curve, parse_point, to_fraction
from .distribution import (Ball, Region, XInterval, density_table, empirical_vs_theoretical,
                           make_model, point_density, region_density, region_mask)
from .accumulate import Counter
from .errors import PrecisionError, ValidationError
from .export import write_csv, write_json
from .orbit import growth_summary, growth_witnesses, make_orbit, nth_point, orbit_scan, sample_rows
from .periods import bounded_loop_period, compute_periods, periods_by_quadrature
from .spacing import compare_spacing, make_problem, spacing_density

log = logging.getLogger("ecorbit")

PRECISION_DPS = {"standard": 70, "high": 140}
ALPHA_BITS = {"standard": 256, "high": 1024}


# -- argument helpers ---------------------------------------------------------


def _pair(text: str, what: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ValidationError(f"{what} must be 'lo,hi', got {text!r}")
    return tuple(float(to_fraction(p.strip())) for p in parts)


def _nmax(args) -> int:
    if args.nmax is None:
        raise ValidationError("--nmax is required for this command")
    if args.nmax < 0:
        raise ValidationError("--nmax must be nonnegative")
    return args.nmax


def _need(args, name: str):
    val = getattr(args, name)
    if val is None:
        raise ValidationError(f"--{name} is required for this command")
    return val


def _orbit(args):
    curve = parse_curve(_need(args, "curve"))
    lattice = compute_periods(curve, PRECISION_DPS[args.precision])
    P = parse_point(curve, _need(args, "point"))
    return curve, lattice, make_orbit(curve, P, lattice)


def _report(args, obj) -> None:
    # the JSON report goes to --report, or to stdout when the CSV is written to a file
    if args.report:
        write_json(args.report, obj)
    elif args.out not in (None, "-"):
        write_json("-", obj)


def parse_alpha(text: str, bits: int = 256) -> dio.HPReal:
    """``golden``, ``pi``, ``e``, ``sqrt:<k>``, ``random:<seed>`` or an exact rational/decimal."""
    t = text.strip().lower()
    consts = {"golden": lambda: (1 + mpmath.sqrt(5)) / 2, "pi": lambda: mpmath.pi, "e": lambda: mpmath.e}
    if t in consts:
        return dio.hp_constant(consts[t], bits)
    if t.startswith("sqrt:"):
        k = to_fraction(t[5:])
        if k < 0:
            raise ValidationError("sqrt argument must be nonnegative")
        return dio.hp_constant(lambda: mpmath.sqrt(mpmath.mpf(k.numerator) / k.denominator), bits)
    if t.startswith("random:"):
        bits32 = max(128, 32 * -(-bits // 32))
        return dio.random_alpha(np.random.default_rng(int(t[7:])), bits32)
    return dio.as_real(to_fraction(text))


# -- commands -----------------------------------------------------------------


def cmd_periods(args) -> None:
    curve = parse_curve(_need(args, "curve"))
    lat = compute_periods(curve, PRECISION_DPS[args.precision])
    quad = periods_by_quadrature(curve)
    rep = {
        "curve": args.curve,
        "g2": str(curve.g2),
        "g3": str(curve.g3),
        "omega1": lat.omega1,
        "omega2": [lat.omega2.real, lat.omega2.imag],
        "shape": lat.shape,
        "q": lat.q,
        "roots": list(lat.roots),
        "omega1_quadrature": quad,
        "quadrature_rel_diff": abs(quad - lat.omega1) / lat.omega1,
    }
    if curve.two_components:
        rep["omega1_bounded_loop"] = bounded_loop_period(curve)
    write_json(args.out, rep)


def cmd_orbit(args) -> None:
    n_max = _nmax(args)
    curve, lattice, orbit = _orbit(args)
    header = ["n", "x", "y", "log_x_plus_2", "growth_bound"]
    w1 = lattice.omega1

    def row(n, x, y):
        lx = math.log(x + 2) if x + 2 > 0 else math.nan
        return (n, x, y, lx, 5.0 * n * n / (w1 * w1))

    if args.precision == "high":
        rows = []
        for n in range(args.every, n_max + 1, args.every):
            P = nth_point(orbit, n, "high")
            rows.append(row(n, math.inf, math.nan) if P.is_infinity else row(n, P.x, P.y))
    else:
        rows = [row(*r) for r in sample_rows(orbit, n_max, args.every, threads=args.threads)]
    write_csv(args.out, header, rows)
    if n_max > 0:
        _report(args, growth_summary(growth_witnesses(orbit, n_max, threads=args.threads)))


def cmd_density(args) -> None:
    curve, lattice, orbit = _orbit(args)
    model = make_model(orbit)
    rep = {"p_component": orbit.component, "omega1": lattice.omega1, "total_mass": model.total_mass()}
    n_max = args.nmax or 0
    if args.at is not None:
        if args.eps is None:
            raise ValidationError("--at needs --eps")
        P0 = parse_point(curve, args.at)
        est = point_density(model, P0, args.eps)
        rep["point_density"] = {"at": [P0.x, P0.y], "eps": args.eps, "value": est.value,
                                "uncertainty": est.uncertainty}
        if n_max and est.value == 0.0:
            rep["point_density"]["empirical_share"] = 0.0  # eta = 0: no multiple ever visits
        elif n_max:
            X0, Y0 = curve.conversion.to_canonical(P0.x, P0.y)
            U = Region(balls=(Ball(X0, Y0, args.eps),))
            (c,) = orbit_scan(orbit, n_max, [Counter(lambda b: region_mask(curve, U, b))], threads=args.threads)
            rep["point_density"]["empirical_share"] = c.result() / n_max
    if args.interval is not None:
        lo, hi = _pair(args.interval, "--interval")
        U = Region(intervals=(XInterval(lo, hi, canonical=False),))
        rep["interval"] = {"lo": lo, "hi": hi, "model": region_density(model, U)}
        if n_max:
            (c,) = orbit_scan(orbit, n_max, [Counter(lambda b: region_mask(curve, U, b))], threads=args.threads)
            rep["interval"]["empirical"] = c.result() / n_max
    if n_max:
        cmp = empirical_vs_theoretical(orbit, model, n_max, threads=args.threads)
        rep["n_max"] = n_max
        rep["cdf_sup_distance"] = cmp.distance
    if args.table is not None:
        lo, hi = model.support()[0][0], min(model.support()[-1][1], model.support()[-1][0] + 20.0)
        xs = np.linspace(lo, hi, args.bins + 1)[1:-1]
        write_csv(args.table, ["X", "density", "cdf"], density_table(model, xs))
    write_json(args.out, rep)


def cmd_spacing(args) -> None:
    n_max = _nmax(args)
    if n_max < 2:
        raise ValidationError("spacing needs --nmax >= 2")
    curve, lattice, orbit = _orbit(args)
    Q = parse_point(curve, _need(args, "q"))
    cmp = compare_spacing(orbit, Q, n_max, trim=args.trim, bins=args.bins, star=not args.no_star,
                          threads=args.threads)
    problem = make_problem(curve, Q)
    rows = []
    for lo, hi, emp, mod in zip(cmp.edges[:-1], cmp.edges[1:], cmp.empirical, cmp.model):
        mid = 0.5 * (lo + hi)
        f = spacing_density(problem, orbit.component, float(mid), star=not args.no_star)
        rows.append((lo, hi, emp, mod, f.value))
    write_csv(args.out, ["bin_lo", "bin_hi", "empirical", "model", "f_mid"], rows)
    _report(args, {"n_max": n_max, "trim": args.trim, "bins": args.bins, "sup_error": cmp.sup_error,
                   "p_component": orbit.component})


def _n_values(text: str) -> List[int]:
    if ":" in text:
        lo, hi = (int(p) for p in text.split(":", 1))
        return list(range(lo, hi + 1))
    return [int(text)]


def cmd_fruit(args) -> None:
    Ns = _n_values(_need(args, "N"))
    if len(Ns) == 1:
        inst = fr.build_instance(Ns[0])
        rep = fr.fruit_report(inst)
        a1, a2 = fr.arclengths(inst)
        rep["arclength_interval1"] = a1
        rep["arclength_interval2"] = a2
        if args.point is not None:
            n_max = _nmax(args)
            P = parse_point(inst.curveEN, args.point)
            res = fr.solution_multiples(inst, P, n_max, threads=args.threads)
            rep["multiples"] = {"n_max": n_max, "ns": res.ns, "smallest_positive": res.smallest_positive,
                                "empirical_density": res.empirical_density, "warning": res.warning}
        write_json(args.out, rep)
        return
    rows = []
    for N in Ns:
        try:
            inst = fr.build_instance(N)
        except ValidationError as exc:
            log.warning("skipping N=%d: %s", N, exc)
            continue
        rows.append((N, inst.A, inst.B, inst.flagged, fr.solution_density(inst), fr.conjecture_residual(inst)))
    write_csv(args.out, ["N", "A", "B", "flagged", "density", "conjecture_residual"], rows)


def cmd_dioph(args) -> None:
    n_max = _nmax(args)
    alpha = parse_alpha(_need(args, "alpha"), ALPHA_BITS[args.precision])
    if args.construct is not None:
        cf = dio.construct_fast_approximable(dio.get_psi(args.psi), args.construct)
        write_json(args.out, {"psi": args.psi, "quotients": [str(a) for a in cf.quotients],
                              "q": [str(q) for q in cf.q], "truncated": cf.truncated})
        return
    psi = dio.get_psi(args.psi)
    ns = dio.khinchin_scan(alpha, psi, n_max, args.method)
    rows = []
    for n in ns:
        d = dio.frac_dist_exact(alpha, n)
        rows.append((n, float(d), float(n * d)))
    write_csv(args.out, ["n", "frac_dist", "n_times_frac_dist"], rows)


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--curve", help="short:a,b | classical:g2,g3 | long:a1,a2,a3,a4,a6")
    common.add_argument("--point", help="x,y or x:+ / x:- (lift with the sign of y)")
    common.add_argument("--nmax", type=int, help="largest multiplier n")
    common.add_argument("--out", default="-", help="output path ('-' for stdout)")
    common.add_argument("--report", help="path for the JSON summary that accompanies CSV output")
    common.add_argument("--precision", choices=sorted(PRECISION_DPS), default="standard")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    common.add_argument("--trim", type=float, default=0.1, help="mass trimmed from each end of the gap histogram")
    common.add_argument("--interval", help="x-interval lo,hi in input coordinates")
    common.add_argument("--eps", type=float, help="ball radius around --at")
    common.add_argument("--psi", default="quadratic", help="linear | nlog2n | quadratic | exponential | hurwitz | power:<p> | CSV path")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ecorbit", description="Statistics of multiples nP on real elliptic curves.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("periods", parents=[common], help="period lattice with a quadrature cross-check")
    o = sub.add_parser("orbit", parents=[common], help="samples of nP and growth witnesses")
    o.add_argument("--every", type=int, default=1, help="keep every k-th multiple in the CSV")
    d = sub.add_parser("density", parents=[common], help="model vs empirical distribution of x(nP)")
    d.add_argument("--at", help="point P0 for a ball-density estimate")
    d.add_argument("--table", help="CSV path for a (X, density, cdf) table")
    d.add_argument("--bins", type=int, default=200)
    s = sub.add_parser("spacing", parents=[common], help="histogram of x(nP+Q) - x(nP) against its density")
    s.add_argument("--q", help="the shift point Q")
    s.add_argument("--bins", type=int, default=50)
    s.add_argument("--no-star", action="store_true", help="keep bounded-oval solutions when P is unbounded")
    f = sub.add_parser("fruit", parents=[common], help="solution density on the family E_N")
    f.add_argument("--N", help="N or an inclusive range lo:hi")
    q = sub.add_parser("dioph", parents=[common], help="n <= nmax with {n alpha} < 1/psi(n)")
    q.add_argument("--alpha", help="golden | pi | e | sqrt:<k> | random:<seed> | p/q | decimal")
    q.add_argument("--method", choices=["auto", "scan", "convergents"], default="auto")
    q.add_argument("--construct", type=int, metavar="DEPTH", help="build an alpha approximable at rate psi instead")
    return p


COMMANDS = {"periods": cmd_periods, "orbit": cmd_orbit, "density": cmd_density, "spacing": cmd_spacing,
            "fruit": cmd_fruit, "dioph": cmd_dioph}


VALUE_FLAGS = ("--point", "--q", "--at", "--interval", "--curve", "--alpha")


def _glue_negative_values(argv: Sequence[str]) -> List[str]:
    # argparse reads "-0.4:+" or "-4,-2" as an option; attach such values to their flag
    out, i = [], 0
    argv = list(argv)
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok in VALUE_FLAGS and nxt is not None and len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == "."):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_negative_values(sys.argv[1:] if argv is None else argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "every", 1) < 1:
        print("error: --every must be positive", file=sys.stderr)
        return 2
    try:
        COMMANDS[args.command](args)
    except PrecisionError as exc:
        print(f"precision error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
