"""Command-line front end.

Exit status: 0 when every checked case passes, 1 when at least one fails,
2 for invalid input (bad flags, infeasible constraints, unreadable config).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .constants import c_p4_reduced, c_pq_bruteforce, ratio_curve
from .extremal import ConstraintSpec, InfeasibleSpec, p_minus, p_plus
from .moments import rademacher_moment
from .report import VerificationReport, fmt_cell, dumps, render
from .suites import SUITES, SuiteOptions, UsageError, build_suite, run_tasks

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return os.cpu_count() or 1


def _timestamp(enabled: bool) -> str | None:
    # off by default so that repeated runs stay byte-identical
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        try:
            when = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
        except ValueError as exc:
            raise UsageError(f"SOURCE_DATE_EPOCH must be an integer, got {epoch!r}") from exc
    elif enabled:
        when = _dt.datetime.now(tz=_dt.timezone.utc).replace(microsecond=0)
    else:
        return None
    return when.isoformat().replace("+00:00", "Z")


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _finite(name: str, value: float, positive: bool = False) -> float:
    if not math.isfinite(value) or (positive and value <= 0):
        raise UsageError(f"--{name} must be {'positive and ' if positive else ''}finite, got {value!r}")
    return value


# --------------------------------------------------------------------------
# constant
# --------------------------------------------------------------------------


def cmd_constant(args, settings: dict) -> int:
    p, q = _finite("p", args.p, True), _finite("q", args.q, True)
    if args.dim < 1:
        raise UsageError("--dim must be a positive integer")
    method = args.method
    if method == "auto":
        method = "reduced" if q == 4 and p >= 4 and args.dim >= 2 else "bruteforce"
    if method == "reduced":
        if q != 4 or p < 4:
            raise UsageError("the reduced method needs q = 4 and p >= 4")
        if args.dim < 2:
            raise UsageError("the reduced method needs --dim >= 2")
        est = c_p4_reduced(p, args.dim, grid=settings["grid_points"], tail_eps=settings["tail_eps"],
                           xtol=settings["golden_xtol"])
    else:
        mode = "grid" if args.dim <= 6 else "multistart"
        est = c_pq_bruteforce(p, q, args.dim, resolution=args.resolution, seed=args.seed, mode=mode)
    record = asdict(est)
    record["argmax"] = list(est.argmax)
    if args.format == "json":
        _emit(dumps(record), args.output)
    else:
        lines = [f"C({fmt_cell(p)}, {fmt_cell(q)}, {est.dim}) = {fmt_cell(est.value)}",
                 f"bracket  [{fmt_cell(est.lower)}, {fmt_cell(est.upper)}]",
                 f"method   {est.method}",
                 f"argmax   {fmt_cell(list(est.argmax))}"]
        if est.method == "reduced":
            lines.append(f"x* = 1   {'yes' if est.at_one else 'no'} (distance {fmt_cell(est.argmax_distance)})")
            if est.heuristic:
                lines.append("note     p < 5: the reduction is not established here; value is heuristic")
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------


def cmd_verify(args, settings: dict) -> int:
    opts = SuiteOptions(settings=settings, p=args.p, q=args.q, y=args.y, n=args.n, gamma=args.gamma,
                        dim_max=args.dim_max, samples=args.samples, seed=args.seed)
    for name in ("p", "q", "y", "gamma"):
        for v in getattr(args, name) or ():
            _finite(name, v)
    suite, tasks, params = build_suite(args.suite, opts)
    workers = _default_workers() if args.workers is None else args.workers
    if workers < 1:
        raise UsageError("--workers must be positive")
    cases = run_tasks(tasks, workers)
    metadata = {"version": __version__, "seed": opts.rng_seed, "parameters": params,
                "settings": settings}
    stamp = _timestamp(args.timestamp)
    if stamp:
        metadata["timestamp"] = stamp
    report = VerificationReport(suite.name, suite.statement, cases, metadata)
    _emit(render(report, args.format), args.output)
    print(f"{suite.name}: {report.pass_count}/{len(cases)} passed, worst slack "
          f"{fmt_cell(report.worst_slack)}", file=sys.stderr)
    return report.exit_code


# --------------------------------------------------------------------------
# extremal
# --------------------------------------------------------------------------


def cmd_extremal(args, settings: dict) -> int:
    alpha = _finite("alpha", args.alpha, True)
    if args.beta4 is not None:
        spec = ConstraintSpec.from_beta4(alpha, _finite("beta4", args.beta4, True), args.n)
    else:
        spec = ConstraintSpec(alpha, _finite("beta", args.beta, True), args.n)
    spec.ratio  # raises InfeasibleSpec outside [1, n]
    ps = [_finite("p", p, True) for p in (args.p or [])]
    configs = {"P+": p_plus(spec), "P-": p_minus(spec)}
    record = {"alpha": spec.alpha, "beta4": spec.beta4, "n": spec.n, "ratio": spec.ratio}
    for label, cfg in configs.items():
        vec = cfg.vector()
        record[label] = {
            "vector": [float(v) for v in vec],
            "moments": {fmt_cell(p): rademacher_moment(vec, p).value for p in ps},
        }
    if args.format == "json":
        _emit(dumps(record), args.output)
    else:
        lines = [f"alpha={fmt_cell(spec.alpha)} beta4={fmt_cell(spec.beta4)} n={spec.n} "
                 f"alpha^4/beta^4={fmt_cell(spec.ratio)}"]
        for label in configs:
            vec = record[label]["vector"]
            lines.append(f"{label} = (" + ", ".join(f"{v:.5f}" for v in vec) + ")")
            for p, m in record[label]["moments"].items():
                lines.append(f"    E|S|^{p} = {fmt_cell(m)}")
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# curve
# --------------------------------------------------------------------------


def cmd_curve(args, settings: dict) -> int:
    p, q = _finite("p", args.p, True), _finite("q", args.q, True)
    lo, hi = _finite("x-min", args.x_min), _finite("x-max", args.x_max)
    if args.n < 1:
        raise UsageError("--n must be a positive integer")
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    if not hi > lo or lo < 0 or (args.spacing == "log" and lo <= 0):
        raise UsageError("need 0 <= x-min < x-max (x-min > 0 for log spacing)")
    xs = np.geomspace(lo, hi, args.points) if args.spacing == "log" else np.linspace(lo, hi, args.points)
    xs[0], xs[-1] = lo, hi
    curve = ratio_curve(args.n, p, q, xs)
    if args.format == "json":
        text = dumps({"n": curve.n, "p": curve.p, "q": curve.q, "spacing": args.spacing,
                      "x": [x for x, _ in curve.samples], "f": [f for _, f in curve.samples]})
    else:
        rows = [f"# f_n(x) = ||x + S_n||_p / ||x + S_n||_q",
                f"# n: {curve.n}", f"# p: {fmt_cell(curve.p)}", f"# q: {fmt_cell(curve.q)}",
                f"# spacing: {args.spacing}", "x,f"]
        rows += [f"{fmt_cell(x)},{fmt_cell(f)}" for x, f in curve.samples]
        text = "\n".join(rows) + "\n"
    _emit(text, args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _suite_listing() -> str:
    width = max(len(k) for k in SUITES)
    lines = ["suites (each checks one statement):"]
    lines += [f"  {name:<{width}}  {s.statement}" for name, s in SUITES.items()]
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="khintchine",
        description="Rademacher and Gaussian moments, dimension-dependent Khintchine constants "
                    "and numeric checks of the inequalities behind C(p,4) = gamma_p/gamma_4.",
        epilog=_suite_listing() + "\n\nexit status: 0 all pass, 1 a check failed, 2 invalid input",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="key = value precision profile (default: bundled; "
                                         "also $KHINTCHINE_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write to this file instead of stdout")

    c = sub.add_parser("constant", parents=[common], help="estimate C(p, q, dim)")
    c.add_argument("--p", type=float, required=True)
    c.add_argument("--q", type=float, default=4.0)
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--method", choices=("auto", "reduced", "bruteforce"), default="auto")
    c.add_argument("--resolution", type=int, help="brute-force lattice size or random start count")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--format", choices=("text", "json"), default="text")
    c.set_defaults(func=cmd_constant)

    v = sub.add_parser("verify", parents=[common], help="run a verification suite",
                       epilog=_suite_listing(), formatter_class=argparse.RawDescriptionHelpFormatter)
    v.add_argument("suite", choices=list(SUITES), metavar="SUITE")
    v.add_argument("--p", type=float, nargs="+")
    v.add_argument("--q", type=float, nargs="+")
    v.add_argument("--y", type=float, nargs="+")
    v.add_argument("--n", type=int, nargs="+")
    v.add_argument("--gamma", type=float, nargs="+", help="beta^4 at alpha = 1 (extremal)")
    v.add_argument("--dim-max", type=int)
    v.add_argument("--samples", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--workers", type=int, help="process count (default: available CPUs)")
    v.add_argument("--format", choices=("json", "csv"), default="json")
    v.add_argument("--timestamp", action="store_true",
                   help="record the wall-clock time (SOURCE_DATE_EPOCH takes precedence)")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("extremal", parents=[common], help="P+ and P- on the constraint set")
    e.add_argument("--alpha", type=float, default=1.0)
    g = e.add_mutually_exclusive_group(required=True)
    g.add_argument("--beta4", type=float)
    g.add_argument("--beta", type=float)
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--p", type=float, nargs="+", help="moments E|S|^p to report")
    e.add_argument("--format", choices=("text", "json"), default="text")
    e.set_defaults(func=cmd_extremal)

    r = sub.add_parser("curve", parents=[common], help="sample f_n(x) = ||x+S_n||_p / ||x+S_n||_q")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--p", type=float, required=True)
    r.add_argument("--q", type=float, default=4.0)
    r.add_argument("--x-min", type=float, default=1.0)
    r.add_argument("--x-max", type=float, default=100.0)
    r.add_argument("--points", type=int, default=200)
    r.add_argument("--spacing", choices=("log", "linear"), default="log")
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.set_defaults(func=cmd_curve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = load_config(args.config)
        return args.func(args, settings)
    except (UsageError, ConfigError, InfeasibleSpec, ValueError) as exc:
        print(f"khintchine: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
