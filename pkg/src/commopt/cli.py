"""Command-line front end.

Exit codes: 0 success, 1 usage or malformed input, 2 domain error (including a
failed verification), 3 no feasible branch.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Dict, List, Optional, Sequence

import yaml

from . import iom, oracle, pipeline, pmp
from .expr import ExprError
from .problems import ProblemFileError, load

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_INFEASIBLE = 0, 1, 2, 3

COMMANDS = ("solve", "commutators", "series", "time-optimal", "error", "convergence", "verify")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="commopt", description=(
        "Time-optimal bang-bang control with commutator-series propagation."))
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    helps = {
        "solve": "full pipeline: branches, series, hit times, optimal time, error gauge",
        "commutators": "nested commutators [H, y_j]_k up to --order",
        "series": "truncated series coefficients, sampled on [0, --t] when given",
        "time-optimal": "branch table and optimal selection",
        "error": "truncation error gauge Delta_N(t) and the kappa window",
        "convergence": "log-log truncation-order slopes for orders 1..--order",
        "verify": "operator/derivation equivalence and integral-of-motion checks",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name])
        p.add_argument("--problem", required=True,
                       help="problem file path or bundled name (oscillator, pendulum, vanderpol)")
        p.add_argument("--order", type=int, help="truncation / commutator order")
        p.add_argument("--u", dest="branch",
                       help="branch: lower, upper, a bound name or a bound value")
        p.add_argument("--t", type=float, help="end time for sampling")
        p.add_argument("--kappa", type=float, help="error threshold for the window")
        p.add_argument("--window", type=float, help="hit-time search window [0, WINDOW]")
        p.add_argument("--format", choices=("json", "csv", "text"), default="json")
        p.add_argument("--out", help="write the report here instead of stdout")
    return parser


# --------------------------------------------------------------------------
# rendering
# --------------------------------------------------------------------------

def to_json(report) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def to_csv(command: str, report: Dict) -> str:
    if command == "error":
        return _csv(["t", "delta", "bound"], report["rows"])
    if command == "series":
        parts = []
        for label, entry in sorted(report["branches"].items()):
            if "samples" not in entry:
                raise UsageError("series --format csv needs --t")
            if len(report["branches"]) > 1:
                parts.append(f"# branch {label}\n")
            parts.append(_csv(["t", *entry["vars"]], entry["samples"]))
        return "".join(parts)
    if command in ("time-optimal", "solve"):
        rows = [[r["label"], r["u"], r["T"], max((abs(x) for x in r["residual"] if x is not None),
                                                 default=None), r["method"], r["feasible"]]
                for r in report["table"]]
        return _csv(["label", "u", "T", "residual", "method", "feasible"], rows)
    if command == "convergence":
        rows = [[label, r["order"], r["slope"], r["expected"]]
                for label, table in sorted(report["branches"].items()) for r in table]
        return _csv(["branch", "order", "slope", "expected"], rows)
    raise UsageError(f"--format csv is not available for {command}")


def to_text(command: str, report: Dict) -> str:
    if command in ("time-optimal", "solve"):
        lines = [f"problem: {report['problem']}"]
        lines.append(f"{'branch':8} {'u':>10} {'T':>22} {'residual':>12} {'method':12} feasible")
        for r in report["table"]:
            res = max((abs(x) for x in r["residual"] if x is not None), default=float("nan"))
            T = "nan" if r["T"] is None else repr(r["T"])
            lines.append(f"{r['label']:8} {r['u']!r:>10} {T:>22} {res:12.3g} {r['method']:12} "
                         f"{r['feasible']}")
        lines.append(f"selected: {report['selected']}  T = {report['T']!r}")
        rest = {k: v for k, v in report.items() if k not in ("table", "problem", "selected", "T")}
        if rest:
            lines.append(yaml.safe_dump(rest, sort_keys=True, width=100).rstrip())
        return "\n".join(lines) + "\n"
    if command == "commutators":
        lines = [f"problem: {report['problem']}"]
        for label, entry in sorted(report["branches"].items()):
            lines.append(f"branch {label} (u = {entry['u']})")
            lines.append(f"  H = {entry['hamiltonian']}")
            for var, column in entry["commutators"].items():
                for k, text in enumerate(column):
                    lines.append(f"  [H, {var}]_{k} = {text}")
        return "\n".join(lines) + "\n"
    return yaml.safe_dump(report, sort_keys=True, width=100)


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def _report(args) -> Dict:
    spec = load(args.problem)
    if args.branch is not None:
        pipeline.select_branches(spec, args.branch)
    if args.command == "solve":
        return pipeline.solve_report(spec, args.order, args.window, args.kappa)
    if args.command == "time-optimal":
        return pipeline.time_optimal_report(spec, args.order, args.window)
    if args.command == "commutators":
        order = 4 if args.order is None else args.order
        if order < 0:
            raise UsageError(f"--order must be non-negative, got {order}")
        return pipeline.commutator_report(spec, order, args.branch)
    if args.command == "series":
        return pipeline.series_report(spec, args.order, args.branch, args.t)
    if args.command == "error":
        return pipeline.error_report(spec, args.order, args.branch, args.t, args.kappa)
    if args.command == "convergence":
        top = args.order if args.order is not None else spec.options.order
        if top < 1:
            raise UsageError(f"--order must be at least 1 for convergence, got {top}")
        return pipeline.convergence_report(spec, range(1, top + 1), args.branch)
    if args.command == "verify":
        return pipeline.verify_report(spec, args.order)
    raise UsageError(f"unknown command {args.command!r}")


def run(argv: Optional[List[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help
            return int(exc.code or 0)
        if args.command is None:
            raise UsageError(f"commopt: a command is required ({', '.join(COMMANDS)})")
        report = _report(args)
        if args.format == "json":
            text = to_json(report)
        elif args.format == "csv":
            text = to_csv(args.command, report)
        else:
            text = to_text(args.command, report)
    except (UsageError, FileNotFoundError, ProblemFileError, pipeline.BranchSelectionError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except pmp.InfeasibleError as exc:
        print(f"infeasible: {exc}", file=stderr)
        return EXIT_INFEASIBLE
    except (pmp.ProblemError, pmp.AmbiguousSelectionError, pmp.DegenerateSystemError,
            iom.DomainError, iom.QuadratureError, oracle.IntegrationError, ExprError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_DOMAIN
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    if args.command == "verify" and not report["ok"]:
        print("error: verification failed", file=stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
