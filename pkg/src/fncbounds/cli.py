"""Command-line driver.

Exit codes: 0 success, 2 invalid arguments, 3 solver convergence failure,
4 golden-table deviation (``table --diff``), 5 coverage outside its band.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import tables
from .bounds import SampleSummary, bounds_report, make_quality_spec
from .errors import ConvergenceError, DomainError
from .mcverify import BoundKind, CoverageConfig, simulate_coverage

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONVERGENCE = 3
EXIT_GOLDEN = 4
EXIT_COVERAGE = 5

GOLDEN_TOL = 1e-2
COVERAGE_BAND = 0.01


def _fmt(x):
    return tables.format_value(x)


def _tail_record(name, tb):
    return {
        "tail": name,
        "expected": tb.expected,
        "lower": tb.lower,
        "upper": tb.upper,
        "delta_hat_lower": tb.delta_hat_lower,
        "delta_hat_upper": tb.delta_hat_upper,
        "underflow": list(tb.underflow),
    }


def run_bounds(args, out) -> int:
    sample = SampleSummary(args.n, args.mean, args.sd)
    spec = make_quality_spec(args.true_value, args.taae)
    rep = bounds_report(sample, spec, args.gamma)
    recs = [_tail_record("lower_limit", rep.lower_tail), _tail_record("upper_limit", rep.upper_tail)]
    if args.format == "json":
        payload = {"n": sample.n, "mean": sample.mean, "sd": sample.sd,
                   "true_value": spec.true_value, "taae": spec.e_max, "lsl": spec.lsl,
                   "usl": spec.usl, "gamma": rep.gamma, "tails": recs}
        out.write(json.dumps(payload, indent=1) + "\n")
    elif args.format == "csv":
        out.write("tail,expected,lower,upper,delta_hat_lower,delta_hat_upper,underflow\n")
        for r in recs:
            out.write(",".join([r["tail"], *(_fmt(r[k]) for k in
                                ("expected", "lower", "upper", "delta_hat_lower", "delta_hat_upper")),
                                "1" if r["underflow"] else "0"]) + "\n")
    else:
        out.write(f"sample      n={sample.n} mean={sample.mean:g} sd={sample.sd:g}\n")
        out.write(f"limits      lsl={spec.lsl:g} usl={spec.usl:g} (c={spec.true_value:g}, "
                  f"taae={spec.e_max:g})  gamma={rep.gamma:g}\n")
        out.write(f"{'tail':<12}{'expected':>14}{'lower':>14}{'upper':>14}"
                  f"{'dhat_lower':>14}{'dhat_upper':>14}\n")
        for r in recs:
            out.write(f"{r['tail']:<12}" + "".join(
                f"{_fmt(r[k]):>14}" for k in
                ("expected", "lower", "upper", "delta_hat_lower", "delta_hat_upper")) + "\n")
            if r["underflow"]:
                out.write(f"  underflow (reported as 0): {', '.join(r['underflow'])}\n")
    return EXIT_OK


def _write_rows(rows, fmt, out, tail=None):
    if fmt == "json":
        out.write(tables.rows_to_json(rows) + "\n")
    elif fmt == "csv":
        if tail is None:
            tables.write_table_csv(rows, out)
        else:
            tables.export_surface(rows, tail, out)
    else:
        names = tables.TAILS if tail is None else (tail,)
        out.write(f"{'mean':>8}{'sd':>7}  {'tail':<12}{'expected':>14}{'lower':>14}{'upper':>14}\n")
        for row in rows:
            for name in names:
                tb = row.tail(name)
                vals = ("nan",) * 3 if tb is None else tuple(
                    tables.format_value(getattr(tb, f), f in tb.underflow)
                    for f in ("expected", "lower", "upper"))
                out.write(f"{row.mean:8.2f}{row.sd:7.2f}  {name:<12}" +
                          "".join(f"{v:>14}" for v in vals) + "\n")


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    try:
        return open(path, "w", encoding="utf-8", newline=""), True
    except OSError as exc:
        raise DomainError(f"cannot open output {path!r}: {exc}") from exc


def run_table(args, out) -> int:
    rows = tables.paper_table(args.which, gamma=args.gamma, jobs=args.jobs)
    sink, owned = _open_out(args.out) if args.out else (out, False)
    try:
        _write_rows(rows, args.format, sink)
    finally:
        if owned:
            sink.close()
    if any(r.errors for r in rows):
        for r in rows:
            for e in r.errors:
                print(f"convergence failure at mean={r.mean}, sd={r.sd}: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    if args.diff is None:
        return EXIT_OK

    if args.diff == "paper":
        golden = tables.load_golden(which=args.which)
    else:
        try:
            golden = tables.load_golden(args.diff)
        except OSError as exc:
            raise DomainError(f"cannot read golden file {args.diff!r}: {exc}") from exc
    checked, bad, cells = tables.compare_to_golden(rows, golden, rel_tol=GOLDEN_TOL)
    report = sys.stderr if sink is out and args.format != "text" else out
    report.write("mean,sd,tail,field,printed,computed,rel_dev\n")
    for c in cells:
        report.write(f"{c.mean:.2f},{c.sd:.2f},{c.tail},{c.field},{_fmt(c.printed)},"
                     f"{_fmt(c.computed)},{c.rel_dev:.3e}\n")
    bad_rows = {(c.mean, c.sd) for c in bad}
    n_rows = len({(c.mean, c.sd) for c in cells})
    report.write(f"{n_rows - len(bad_rows)}/{n_rows} rows within tolerance "
                 f"({checked - len(bad)}/{checked} cells, rel tol {GOLDEN_TOL:g})\n")
    for c in bad:
        report.write(f"MISMATCH mean={c.mean:.2f} sd={c.sd:.2f} {c.tail}.{c.field}: "
                     f"printed {_fmt(c.printed)} computed {_fmt(c.computed)}\n")
    return EXIT_GOLDEN if bad else EXIT_OK


def _grid_from_args(args):
    if args.preset:
        base = tables.TABLE1_PRESETS[args.preset]
        return dataclasses.replace(base, gamma=args.gamma)
    needed = ("mean_start", "mean_stop", "mean_step", "sd_start", "sd_stop", "sd_step",
              "n", "true_value", "taae")
    missing = [k for k in needed if getattr(args, k) is None]
    if missing:
        raise DomainError("without --preset these flags are required: "
                          + ", ".join("--" + k.replace("_", "-") for k in missing))
    return tables.GridSpec(args.mean_start, args.mean_stop, args.mean_step, args.sd_start,
                           args.sd_stop, args.sd_step, n=args.n, true_value=args.true_value,
                           e_max=args.taae, gamma=args.gamma)


def run_sweep(args, out) -> int:
    grid = _grid_from_args(args)
    rows = tables.sweep(grid, jobs=args.jobs)
    sink, owned = _open_out(args.out) if args.out else (out, False)
    try:
        _write_rows(rows, args.format, sink, tail=args.tail)
    finally:
        if owned:
            sink.close()
    failed = [r for r in rows if r.errors]
    if failed:
        print(f"{len(failed)} of {len(rows)} points had convergence failures", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def run_verify(args, out) -> int:
    kind = BoundKind(args.kind.replace("-", "_"))
    if args.limit is not None:
        limit = args.limit
    elif args.taae is not None and args.true_value is not None:
        spec = make_quality_spec(args.true_value, args.taae)
        limit = spec.usl if kind.is_upper_tail else spec.lsl
    else:
        raise DomainError("give either --limit or both --taae and --true-value")
    config = CoverageConfig(args.mu, args.sigma, args.n, limit, args.gamma, args.trials, args.seed)
    res = simulate_coverage(config, kind, jobs=args.jobs)
    ok = res.within(args.gamma, COVERAGE_BAND)
    if args.format == "json":
        out.write(json.dumps({"kind": kind.value, "limit": limit, "gamma": args.gamma,
                              "hits": res.hits, "trials": res.trials,
                              "empirical_coverage": res.empirical_coverage,
                              "standard_error": res.standard_error,
                              "failures": res.failures, "pass": ok}) + "\n")
    else:
        out.write(f"kind={kind.value} limit={limit:g} gamma={args.gamma:g} seed={args.seed}\n")
        out.write(f"hits={res.hits} trials={res.trials} failures={res.failures}\n")
        out.write(f"empirical_coverage={_fmt(res.empirical_coverage)} "
                  f"standard_error={_fmt(res.standard_error)}\n")
        out.write(f"{'PASS' if ok else 'FAIL'}: |coverage - gamma| "
                  f"{'<=' if ok else '>'} {COVERAGE_BAND:g}\n")
    return EXIT_OK if ok else EXIT_COVERAGE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fncbounds",
        description="Confidence bounds for the fraction nonconforming of normal measurements.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="bounds for one sample summary")
    b.add_argument("--mean", type=float, required=True)
    b.add_argument("--sd", type=float, required=True)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--true-value", type=float, required=True)
    b.add_argument("--taae", type=float, required=True,
                   help="total allowable analytical error, as a ratio of the true value")
    b.add_argument("--gamma", type=float, default=0.95, help="confidence level")
    b.add_argument("--format", choices=("text", "csv", "json"), default="text")
    b.set_defaults(func=run_bounds)

    t = sub.add_parser("table", help="recompute one of the published 30-row tables")
    t.add_argument("--which", type=int, choices=sorted(tables.PAPER_TABLES), required=True)
    t.add_argument("--gamma", type=float, default=0.95)
    t.add_argument("--format", choices=("text", "csv", "json"), default="csv")
    t.add_argument("--out", help="output path (default stdout)")
    t.add_argument("--diff", metavar="GOLDEN",
                   help="golden CSV to compare against, or 'paper' for the bundled copy")
    t.add_argument("--jobs", type=int, default=1)
    t.set_defaults(func=run_table)

    s = sub.add_parser("sweep", help="evaluate a (mean, sd) grid and export a surface")
    s.add_argument("--preset", choices=sorted(tables.TABLE1_PRESETS))
    for name in ("mean-start", "mean-stop", "mean-step", "sd-start", "sd-stop", "sd-step",
                 "true-value", "taae"):
        s.add_argument(f"--{name}", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--gamma", type=float, default=0.95)
    s.add_argument("--tail", choices=tables.TAILS, default=None,
                   help="export one tail as a surface (csv); default writes both tails")
    s.add_argument("--format", choices=("text", "csv", "json"), default="csv")
    s.add_argument("--out")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=run_sweep)

    v = sub.add_parser("verify", help="Monte Carlo coverage check")
    v.add_argument("--mu", type=float, required=True)
    v.add_argument("--sigma", type=float, required=True)
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--limit", type=float)
    v.add_argument("--taae", type=float)
    v.add_argument("--true-value", type=float)
    v.add_argument("--gamma", type=float, default=0.95)
    v.add_argument("--trials", type=int, default=10_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--kind", choices=[k.value.replace("_", "-") for k in BoundKind],
                   default="upper-lower-tail")
    v.add_argument("--jobs", type=int, default=1)
    v.add_argument("--format", choices=("text", "json"), default="text")
    v.set_defaults(func=run_verify)
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, out)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        if exc.bracket is not None:
            print(f"best bracket: {exc.bracket}", file=sys.stderr)
        return EXIT_CONVERGENCE


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
