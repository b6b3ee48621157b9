"""Command-line entry point.

Subcommands: ``psi`` (compute the series pair), ``verify`` (classical,
braiding and transport suites), ``eval`` (matrix evaluation on an
algebra), ``table validate`` and ``omega``.  Text output uses the
canonical interchange grammar shared with the library, so identical
invocations are byte-identical and golden files can be diffed.

Exit codes: 0 success, 1 a verified identity failed, 2 bad arguments,
3 unreadable or invalid table/algebra input.
"""

from __future__ import annotations

import argparse
import json
import sys

from .deformation import TableError, load_table, validate_table
from .hseries import SeriesError
from .liealg import (
    AlgebraError,
    build_algebra,
    build_tensor_ops,
    eval_series,
    spectral_report,
    structure_report,
    verify_classical,
    verify_sigma_rmatrix,
)
from .ncalg import WordError
from .psiengine import compute_psi
from .transport import TransportError, verify_identity

__all__ = ["main"]

TRANSPORT_IDENTITIES = ("4.3a", "4.3b", "4.4", "4.5", "5.1a", "5.1b", "sigma_h_def")


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def cmd_psi(args) -> int:
    if args.golden and args.format == "json":
        raise ValueError("--golden conflicts with --format json")
    table = load_table(args.table)
    pair = compute_psi(table, args.order)
    if args.format == "json" and not args.golden:
        doc = {
            "order": pair.order,
            "table": pair.table_id,
            "psi": pair.psi.to_json(),
            "psi_inv": pair.psi_inv.to_json(),
        }
        _emit(_json_text(doc), args.out)
    else:
        lines = ["psi:", pair.psi.to_text(), "psi_inv:", pair.psi_inv.to_text()]
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_eval(args) -> int:
    table = load_table(args.table)
    pair = compute_psi(table, args.order)
    ops = build_tensor_ops(build_algebra(args.algebra))
    series = eval_series(pair.psi, ops)
    if args.format == "json":
        doc = {
            "algebra": ops.alg.name,
            "order": series.order,
            "coeffs": [m.to_json() for m in series.coeffs],
        }
        _emit(_json_text(doc), args.out)
    else:
        _emit(series.to_text() + "\n", args.out)
    return 0


def _collect_verify_reports(args):
    reports = []
    if args.suite in ("classical", "rmatrix", "all"):
        ops = build_tensor_ops(build_algebra(args.algebra))
        if args.suite in ("classical", "all"):
            classical = verify_classical(ops)
            structure = structure_report(ops)
            reports.append(("classical", classical.to_json()))
            reports.append(("structure", structure.to_json()))
        if args.suite in ("rmatrix", "all"):
            reports.append(("rmatrix", verify_sigma_rmatrix(ops, args.order).to_json()))
    if args.suite in ("transport", "all"):
        names = TRANSPORT_IDENTITIES if args.identity == "all" else (args.identity,)
        table = load_table(args.table)
        for name in names:
            report = verify_identity(name, table=table, order=args.order)
            reports.append((f"transport:{name}", report.to_json()))
    return reports


def cmd_verify(args) -> int:
    reports = _collect_verify_reports(args)
    all_passed = all(doc["passed"] for _, doc in reports)
    if args.format == "json":
        _emit(_json_text({"passed": all_passed, "reports": dict(reports)}), args.out)
    else:
        lines = []
        for name, doc in reports:
            if "checks" in doc:
                for check in doc["checks"]:
                    status = "PASS" if check["passed"] else "FAIL"
                    detail = f"  {check['detail']}" if check["detail"] else ""
                    lines.append(f"{status} {name}:{check['name']}{detail}")
            else:
                status = "PASS" if doc["passed"] else "FAIL"
                lines.append(f"{status} {name}")
        lines.append("OK" if all_passed else "FAILED")
        _emit("\n".join(lines) + "\n", args.out)
    return 0 if all_passed else 1


def cmd_table(args) -> int:
    table = load_table(args.path)
    diagnostics = validate_table(table)
    doc = {
        "source": diagnostics.source,
        "valid": diagnostics.ok,
        "degrees": diagnostics.degrees,
        "missing_below_max": diagnostics.missing_below_max,
        "problems": diagnostics.problems,
    }
    _emit(_json_text(doc), args.out)
    return 0 if diagnostics.ok else 3


def cmd_omega(args) -> int:
    ops = build_tensor_ops(build_algebra(args.algebra))
    report = spectral_report(ops.Omega)
    if args.format == "json":
        doc = report.to_json()
        doc["matrix"] = ops.Omega.to_json()
        _emit(_json_text(doc), args.out)
    else:
        lines = [
            f"algebra: {ops.alg.name}",
            f"trace: {report.trace}",
            f"annihilating: {report.factored_text()}",
        ]
        for root, mult, dim in report.factors:
            lines.append(f"eigenvalue {root}: multiplicity {mult}, kernel dimension {dim}")
        lines.append("matrix: " + json.dumps(ops.Omega.to_json()["data"], sort_keys=True))
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _order_at_least_two(value: str) -> int:
    order = int(value)
    if order < 2:
        raise argparse.ArgumentTypeError("order must be at least 2")
    return order


def _positive_int(value: str) -> int:
    order = int(value)
    if order < 1:
        raise argparse.ArgumentTypeError("order must be positive")
    return order


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qjacobi",
        description="Exact computation and verification of the deformed associator identities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    psi = sub.add_parser("psi", help="compute the series pair modulo h^N")
    psi.add_argument("--order", "-n", type=_order_at_least_two, required=True)
    psi.add_argument("--table", default="builtin")
    psi.add_argument("--format", choices=("text", "json"), default="text")
    psi.add_argument("--golden", action="store_true", help="force the canonical text form")
    psi.add_argument("--out")
    psi.set_defaults(func=cmd_psi)

    verify = sub.add_parser("verify", help="run a verification suite")
    verify.add_argument("suite", choices=("classical", "rmatrix", "transport", "all"))
    verify.add_argument("--algebra", default="sl2")
    verify.add_argument("--order", "-n", type=_positive_int, default=4)
    verify.add_argument("--identity", choices=TRANSPORT_IDENTITIES + ("all",), default="all")
    verify.add_argument("--table", default="builtin")
    verify.add_argument("--format", choices=("text", "json"), default="text")
    verify.add_argument("--out")
    verify.set_defaults(func=cmd_verify)

    ev = sub.add_parser("eval", help="evaluate the series on an algebra")
    ev.add_argument("--algebra", required=True)
    ev.add_argument("--order", "-n", type=_order_at_least_two, required=True)
    ev.add_argument("--table", default="builtin")
    ev.add_argument("--format", choices=("text", "json"), default="text")
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_eval)

    table = sub.add_parser("table", help="coefficient table utilities")
    table_sub = table.add_subparsers(dest="table_command", required=True)
    validate = table_sub.add_parser("validate", help="validate a table file")
    validate.add_argument("path")
    validate.add_argument("--out")
    validate.set_defaults(func=cmd_table)

    omega = sub.add_parser("omega", help="print the two-site Casimir operator report")
    omega.add_argument("--algebra", required=True)
    omega.add_argument("--format", choices=("text", "json"), default="text")
    omega.add_argument("--out")
    omega.set_defaults(func=cmd_omega)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TableError, AlgebraError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (TransportError, SeriesError, WordError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
