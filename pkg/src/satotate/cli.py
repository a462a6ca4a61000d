"""Command-line surface: density/cdf grids, the extremal-growth table,
Monte Carlo sampling, the census, strata scatters, and a self-check.

Exit codes: 0 success, 2 usage error, 3 numerical-tolerance failure,
4 I/O failure.  A flat `key = value` config file (--config) supplies
defaults that explicit flags override; unknown keys are rejected.  Thread
count comes from --threads, the config file, or SATOTATE_THREADS.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import census, sampler, specfun, svgplot, tracedist
from .measures import (Chart, GroupKind, AnglePoint, TracePoint, SymPoint, DeltaPoint,
                       LambdaPoint, angles_to_traces, traces_to_sym, sym_to_delta,
                       delta_to_lambda, joint_density, mu_delta_density)
from .quadrature import QuadratureError
from .tracedist import DensityRoute

GROUPS = {"G": GroupKind.G_USP4, "H": GroupKind.H_SU2XSU2, "Delta": GroupKind.DELTA_SU2}
ROUTES = {"series": DensityRoute.SERIES, "quadrature": DensityRoute.QUADRATURE,
          "closed": DensityRoute.CLOSED_FORM}

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_TOLERANCE = 3
EXIT_IO = 4

_TOLERANCE_ERRORS = (tracedist.ToleranceNotMetError, tracedist.CalibrationError,
                     specfun.ConvergenceError, QuadratureError, census.ConsistencyError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satotate",
        description="Trace distributions of the genus-2 symmetry types and "
                    "finite-field census cross-checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file; flags override it")
    common.add_argument("--threads", type=int,
                        help="worker count (default: SATOTATE_THREADS or 1)")

    p = sub.add_parser("density", parents=[common],
                       help="density grid f(s1) by a chosen route",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--group", choices=sorted(GROUPS))
    p.add_argument("--route", choices=sorted(ROUTES))
    p.add_argument("--grid", type=int, help="number of grid points (default 401)")
    p.add_argument("--from", dest="lo", type=float, help="left endpoint (default -4)")
    p.add_argument("--to", dest="hi", type=float, help="right endpoint (default 4)")
    p.add_argument("--csv", help="write s1,f,est_error rows here")
    p.add_argument("--svg", help="write a line plot here")

    p = sub.add_parser("cdf", parents=[common],
                       help="cumulative distribution grid F(s1)",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--group", choices=sorted(GROUPS))
    p.add_argument("--route", choices=["quadrature"],
                   help="the distribution function integrates the quadrature density")
    p.add_argument("--grid", type=int)
    p.add_argument("--from", dest="lo", type=float)
    p.add_argument("--to", dest="hi", type=float)
    p.add_argument("--csv", help="write s1,F rows here")
    p.add_argument("--svg", help="write a line plot here")

    p = sub.add_parser("table", parents=[common],
                       help="extremal-growth approximations and ratios at eps = d/sqrt(q)",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--q", type=float)
    p.add_argument("--d", type=float)

    p = sub.add_parser("sample", parents=[common],
                       help="seeded Monte Carlo trace samples",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--group", choices=sorted(GROUPS))
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ks", action="store_true",
                   help="print the KS distance against the analytic distribution")
    p.add_argument("--csv", help="write index,s1 rows here")

    p = sub.add_parser("census", parents=[common],
                       help="full curve census at an odd prime q",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--q", type=int)
    p.add_argument("--degree6", action="store_true",
                   help="also enumerate degree-6 models")
    p.add_argument("--out", help="census cache CSV path")

    p = sub.add_parser("strata", parents=[common],
                       help="discriminant-band scatter (s1, delta0)",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--q", type=int)
    p.add_argument("--D", help="comma-separated stratum labels, e.g. 5,12,37,97")
    p.add_argument("--mode", choices=["weil", "census"],
                   help="weil: lattice enumeration (any q); census: curve counts (q <= 31)")
    p.add_argument("--svg", help="write a scatter plot here")
    p.add_argument("--csv", help="write D,m0,s1,delta0,count rows here")

    sub.add_parser("selfcheck", parents=[common],
                   help="run the invariant suite and print a pass/fail table",
                   argument_default=argparse.SUPPRESS)
    return parser


_DEFAULTS = {
    "density": {"group": "G", "route": "quadrature", "grid": 401, "lo": -4.0, "hi": 4.0,
                "csv": None, "svg": None},
    "cdf": {"group": "G", "route": "quadrature", "grid": 401, "lo": -4.0, "hi": 4.0,
            "csv": None, "svg": None},
    "table": {"q": 47.0, "d": 1.0},
    "sample": {"group": "G", "n": 100_000, "seed": 1, "ks": False, "csv": None},
    "census": {"q": 5, "degree6": False, "out": None},
    "strata": {"q": 47, "D": "5,12,37,97", "mode": "weil", "svg": None, "csv": None},
    "selfcheck": {},
}

_TYPES = {
    "grid": int, "lo": float, "hi": float, "q": None, "d": float, "n": int,
    "seed": int, "threads": int, "ks": bool, "degree6": bool,
}


def _coerce(command: str, key: str, raw: str):
    if key in ("ks", "degree6"):
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"config key {key} expects a boolean, got {raw!r}")
    if key == "q":
        return float(raw) if command == "table" else int(raw)
    typ = _TYPES.get(key)
    return typ(raw) if typ else raw


def _read_config(command: str, path: str) -> dict:
    allowed = set(_DEFAULTS[command]) | {"threads"}
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if key not in allowed:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = _coerce(command, key, raw.strip())
    return out


def _resolve(args: argparse.Namespace) -> dict:
    command = args.command
    given = {k: v for k, v in vars(args).items() if k != "command"}
    merged = dict(_DEFAULTS[command])
    merged["threads"] = None
    if given.get("config"):
        merged.update(_read_config(command, given.pop("config")))
    given.pop("config", None)
    merged.update(given)
    if merged.get("threads") is None:
        merged["threads"] = int(os.environ.get("SATOTATE_THREADS", "1"))
    if merged["threads"] < 1:
        raise ValueError("threads must be >= 1")
    merged["command"] = command
    return merged


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _emit_rows(opts, header, rows):
    if opts["csv"]:
        _write_csv(opts["csv"], header, rows)
    if not opts["csv"] and not opts.get("svg"):
        print(",".join(header))
        for row in rows:
            print(",".join(str(c) for c in row))


def cmd_density(opts) -> int:
    group = GROUPS[opts["group"]]
    route = ROUTES[opts["route"]]
    if opts["grid"] < 2:
        raise ValueError("--grid must be >= 2")
    if not (-4.0 <= opts["lo"] < opts["hi"] <= 4.0):
        raise ValueError("--from/--to must satisfy -4 <= from < to <= 4")
    xs = np.linspace(opts["lo"], opts["hi"], opts["grid"])
    values = [tracedist.density(group, float(s), route) for s in xs]
    rows = [(f"{s:.17g}", f"{dv.value:.17g}", f"{dv.est_error:.3g}")
            for s, dv in zip(xs, values)]
    _emit_rows(opts, ["s1", "f", "est_error"], rows)
    if opts["svg"]:
        svgplot.line_plot(opts["svg"], xs, {f"{opts['group']} ({opts['route']})":
                                            [dv.value for dv in values]},
                          "trace density", "s1", "f(s1)")
    return EXIT_OK


def cmd_cdf(opts) -> int:
    group = GROUPS[opts["group"]]
    if opts["grid"] < 2:
        raise ValueError("--grid must be >= 2")
    if not (-4.0 <= opts["lo"] < opts["hi"] <= 4.0):
        raise ValueError("--from/--to must satisfy -4 <= from < to <= 4")
    xs = np.linspace(opts["lo"], opts["hi"], opts["grid"])
    table = tracedist.cdf_function(group)
    ys = table(xs)
    rows = [(f"{s:.17g}", f"{v:.17g}") for s, v in zip(xs, ys)]
    _emit_rows(opts, ["s1", "F"], rows)
    if opts["svg"]:
        svgplot.line_plot(opts["svg"], xs, {opts["group"]: list(ys)},
                          "trace distribution function", "s1", "F(s1)")
    return EXIT_OK


def cmd_table(opts) -> int:
    q, d = opts["q"], opts["d"]
    eps = d / math.sqrt(q)
    rows = [
        ("f_G ~ eps^4/(64 pi)", tracedist.leading_density(GroupKind.G_USP4, eps)),
        ("F_G ~ eps^5/(320 pi)", tracedist.leading_cdf(GroupKind.G_USP4, eps)),
        ("f_H ~ eps^2/(8 pi)", tracedist.leading_density(GroupKind.H_SU2XSU2, eps)),
        ("F_H ~ eps^3/(24 pi)", tracedist.leading_cdf(GroupKind.H_SU2XSU2, eps)),
        ("f_Delta ~ sqrt(eps)/(sqrt(8) pi)", tracedist.leading_density(GroupKind.DELTA_SU2, eps)),
        ("F_Delta ~ eps^(3/2)/(3 sqrt(2) pi)", tracedist.leading_cdf(GroupKind.DELTA_SU2, eps)),
    ]
    print(f"q = {q:g}, defect d = {d:g}, eps = d/sqrt(q) = {eps:.12g}")
    for label, value in rows:
        print(f"  {label:36s} = {value:.12e}")
    print(f"  F_Delta/F_H = 4 sqrt(2) q^(3/4)/d^(3/2) = "
          f"{tracedist.ratio_delta_over_H(d, q):.12e}")
    print(f"  F_H/F_G     = 40 q/(3 d^2)             = "
          f"{tracedist.ratio_H_over_G(d, q):.12e}")
    gq, hq, dq = tracedist.dominance_table(d, q)
    print(f"  weighted counts: F_G*q^3 = {gq:.12e}, F_H*q^2 = {hq:.12e}, "
          f"F_Delta*q = {dq:.12e}")
    print(f"  (the generic and product entries cross at d = sqrt(40/3) = "
          f"{math.sqrt(40.0 / 3.0):.6f})")
    return EXIT_OK


def cmd_sample(opts) -> int:
    group = GROUPS[opts["group"]]
    config = sampler.SamplerConfig(seed=opts["seed"], n_samples=opts["n"], group=group)
    summary = sampler.sample_summary(config, workers=opts["threads"])
    if opts["csv"]:
        sampler.write_samples_csv(opts["csv"], summary.sorted_traces)
    print(f"drew {summary.n} {opts['group']} traces, seed {opts['seed']}, "
          f"mean {summary.sorted_traces.mean():.6f}")
    if opts["ks"]:
        if summary.n < 1_000_000:
            print("warning: KS threshold is calibrated for n >= 10^6; check skipped")
        else:
            dist = sampler.ks_distance(summary, group)
            verdict = "pass" if dist < 0.003 else "FAIL"
            print(f"KS distance = {dist:.6f} ({verdict} at 0.003)")
            if dist >= 0.003:
                return EXIT_TOLERANCE
    return EXIT_OK


def cmd_census(opts) -> int:
    report = census.run_census(opts["q"], include_degree6=opts["degree6"],
                               threads=opts["threads"])
    if opts["out"]:
        census.write_census_csv(opts["out"], report)
    print(f"census q={report.q}: {report.model_count} models, "
          f"{len(report.counts)} Frobenius classes, {len(report.strata)} strata")
    print(f"  runtime {report.metadata['runtime_seconds']:.2f}s on "
          f"{report.metadata['threads']} worker(s)")
    print(f"  note: {report.metadata['caveats']}")
    if report.metadata["band_checks_ok"]:
        print("  band constraints: all classes pass")
        return EXIT_OK
    print(f"  band constraints FAILED for {len(report.metadata['band_violations'])} classes")
    for key, bad in report.metadata["band_violations"][:10]:
        print(f"    {key}: {'; '.join(bad)}")
    return EXIT_TOLERANCE


def cmd_strata(opts) -> int:
    d_list = [int(tok) for tok in str(opts["D"]).split(",") if tok.strip()]
    if not d_list:
        raise ValueError("--D needs at least one stratum label")
    if opts["mode"] == "weil":
        scatter = census.weil_class_scatter(opts["q"], d_list)
    else:
        report = census.run_census(opts["q"], threads=opts["threads"])
        scatter = {d: [] for d in sorted(set(d_list))}
        for fc, count in report.classes():
            m0, d_label = census.decompose_real_disc(fc.delta_real)
            if d_label in scatter:
                scatter[d_label].append(
                    census.ScatterPoint(d_label, m0, fc.s1, fc.delta0, count))
    for d_label, points in scatter.items():
        bands = sorted({p.m0 for p in points})
        print(f"D={d_label}: {len(points)} classes, bands m0 = {bands}")
    if opts["csv"]:
        census.write_scatter_csv(opts["csv"], scatter)
    if opts["svg"]:
        groups = {f"D={d}": ([p.s1 for p in pts], [p.delta0 for p in pts])
                  for d, pts in scatter.items() if pts}
        svgplot.scatter_plot(opts["svg"], groups, f"discriminant bands at q={opts['q']}",
                             "s1", "delta0")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Self-check suite.

def _check_moments():
    from .quadrature import adaptive_quad
    worst = 0.0
    for n in range(11):
        oracle, _ = adaptive_quad(lambda lam, n=n: lam ** (2 * n) * np.sqrt(1 - lam * lam),
                                  0.0, 1.0, abs_tol=1e-13)
        worst = max(worst, abs(specfun.moment_integral(n) - oracle))
    return worst <= 1e-11, f"max deviation {worst:.2e} (tol 1e-11)"


def _check_legendre_relation():
    worst = 0.0
    for m in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]:
        lhs = (specfun.elliptic_E(m) * specfun.elliptic_K(1 - m)
               + specfun.elliptic_E(1 - m) * specfun.elliptic_K(m)
               - specfun.elliptic_K(m) * specfun.elliptic_K(1 - m))
        worst = max(worst, abs(lhs - math.pi / 2))
    return worst <= 1e-12, f"max deviation {worst:.2e} (tol 1e-12)"


def _check_route_agreement(perturbation: float):
    worst = 0.0
    for group in (GroupKind.G_USP4, GroupKind.H_SU2XSU2):
        for s in np.linspace(-4.0, 0.0, 9):
            a = tracedist.density(group, float(s), DensityRoute.SERIES).value
            a *= 1.0 + perturbation
            b = tracedist.density(group, float(s), DensityRoute.QUADRATURE).value
            worst = max(worst, abs(a - b))
    return worst <= 1e-9, f"max |series - quadrature| {worst:.2e} (tol 1e-9)"


def _check_closed_forms():
    worst = 0.0
    for group in GROUPS.values():
        for s in np.linspace(-3.75, -0.25, 15):
            a = tracedist.density(group, float(s), DensityRoute.CLOSED_FORM).value
            b = tracedist.density(group, float(s), DensityRoute.QUADRATURE).value
            worst = max(worst, abs(a - b))
    return worst <= 1e-8, f"max |closed - quadrature| {worst:.2e} (tol 1e-8)"


def _check_normalization():
    worst = 0.0
    for group in GROUPS.values():
        worst = max(worst, abs(tracedist.cdf_function(group).total - 1.0))
    return worst <= 1e-8, f"max |int f - 1| {worst:.2e} (tol 1e-8)"


def _check_jacobians():
    rng = np.random.default_rng(20260810)
    worst = 0.0
    for _ in range(200):
        t1, t2 = rng.uniform(-1.995, 1.995, 2)
        if abs(t1 - t2) < 1e-3:
            continue
        tp = TracePoint(t1, t2)
        ap = AnglePoint(math.acos(t1 / 2.0), math.acos(t2 / 2.0))
        sp = traces_to_sym(tp)
        dp = sym_to_delta(sp)
        for group in (GroupKind.G_USP4, GroupKind.H_SU2XSU2):
            f_tr = joint_density(group, tp, Chart.TRACE)
            f_an = joint_density(group, ap, Chart.ANGLE)
            jac = 4.0 * math.sin(ap.theta1) * math.sin(ap.theta2)
            worst = max(worst, abs(f_tr - f_an / jac))
            f_sym = joint_density(group, sp, Chart.SYM)
            worst = max(worst, abs(f_sym - 2.0 * f_tr / math.sqrt(max(disc0 := (t1 - t2) ** 2, 1e-300))))
            f_del = joint_density(group, dp, Chart.DELTA)
            worst = max(worst, abs(f_del - 0.5 * dp.delta0 * f_sym))
            if sp.s1 <= 0:
                lp = delta_to_lambda(dp)
                f_lam = joint_density(group, lp, Chart.LAMBDA)
                worst = max(worst, abs(f_lam - lp.eps * f_del))
    return worst <= 1e-11, f"max chart transport defect {worst:.2e} (tol 1e-11)"


def _check_census_small():
    report = census.run_census(5)
    ok = (report.model_count == 5 ** 5 - 5 ** 4
          and report.metadata["n1_sum_all_models"] == 5 ** 6 + 5 ** 5
          and report.metadata["band_checks_ok"])
    return ok, (f"q=5: {report.model_count} squarefree models, "
                f"sum N1 = {report.metadata['n1_sum_all_models']}, "
                f"bands {'ok' if report.metadata['band_checks_ok'] else 'VIOLATED'}")


def _check_calibration():
    cal = tracedist.g_closed_form_calibration()
    ok = cal.max_rel_dev <= 1e-6
    return ok, (f"fitted scale {cal.scale:.12f} (pi*scale = {math.pi * cal.scale:.9f}), "
                f"grid deviation {cal.max_rel_dev:.2e} (tol 1e-6)")


def run_selfcheck(series_perturbation: float = 0.0) -> int:
    """Invariant suite; series_perturbation is a test hook that scales the
    series-route values in the route-agreement check."""
    checks = [
        ("moment integrals vs adaptive quadrature", _check_moments),
        ("elliptic Legendre relation", _check_legendre_relation),
        ("series vs quadrature route agreement",
         lambda: _check_route_agreement(series_perturbation)),
        ("closed forms vs quadrature", _check_closed_forms),
        ("density normalization", _check_normalization),
        ("chart Jacobian consistency", _check_jacobians),
        ("census q=5 exactness and bands", _check_census_small),
        ("generic closed-form calibration", _check_calibration),
    ]
    all_ok = True
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # a failed invariant must not hide the rest
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        print(f"{'ok  ' if ok else 'FAIL'}  {name}: {detail}")
    print("selfcheck:", "all checks passed" if all_ok else "FAILURES above")
    return EXIT_OK if all_ok else EXIT_TOLERANCE


_HANDLERS = {
    "density": cmd_density,
    "cdf": cmd_cdf,
    "table": cmd_table,
    "sample": cmd_sample,
    "census": cmd_census,
    "strata": cmd_strata,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        opts = _resolve(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if opts["command"] == "selfcheck":
            return run_selfcheck()
        return _HANDLERS[opts["command"]](opts)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _TOLERANCE_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
