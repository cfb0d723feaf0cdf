"""
Command-line front end.

Subcommands:
  table          run the iteration-count sweep and write results.csv
  accuracy       check the absorbing layer against the free-space reference
  rate           sweep the reduction rate over k and write rate.csv
  export-matrix  dump the assembled global system as text files

Every subcommand takes --config (flat key=value text); --out selects the
output directory.  Exit status is 0 on success and nonzero on any failure,
including per-cell errors when --strict is set.
"""

from __future__ import annotations

import argparse
import os
import sys

from .harness import (
    ConfigError,
    designated_iteration,
    export_matrix,
    load_config,
    pml_accuracy_test,
    run_rate,
    run_table,
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="path to a key=value config file")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--max-dofs", type=int, default=None,
                   help="override the mesh size guard (dof count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="helmlab",
        description="Helmholtz domain-decomposition experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_table = sub.add_parser("table", help="iteration-count sweep, one CSV row per cell")
    _add_common(p_table)
    p_table.add_argument("--threads", type=int, default=1,
                         help="cells run concurrently per wavenumber (default 1)")
    p_table.add_argument("--strict", action="store_true",
                         help="run the accuracy gate first and fail on any bad cell")

    p_acc = sub.add_parser("accuracy", help="absorbing-layer accuracy vs free-space reference")
    _add_common(p_acc)
    p_acc.add_argument("--k", type=float, default=None,
                       help="wavenumber to test (default: smallest configured)")
    p_acc.add_argument("--control", action="store_true",
                       help="also run with absorption off and report the ratio")

    p_rate = sub.add_parser("rate", help="reduction rate at the designated iteration per k")
    _add_common(p_rate)

    p_exp = sub.add_parser("export-matrix", help="write the global system as COO text")
    _add_common(p_exp)
    p_exp.add_argument("--k", type=float, default=None,
                       help="wavenumber to export (default: first configured)")

    return parser


def _accuracy_gate(config, args, out) -> int:
    """Run the layer-accuracy check; returns 0 if within threshold."""
    k = getattr(args, "k", None)
    report = pml_accuracy_test(config, k=k, max_dofs=args.max_dofs)
    out.write(
        f"accuracy: k={report.k:g} kappa={report.kappa:.6g} a={report.a:g} "
        f"sigma={report.sigma:.6g} dofs={report.dofs} annulus={report.n_annulus} "
        f"rel_err={report.rel_err:.3e} threshold={report.threshold:g} "
        f"{'PASS' if report.passed else 'FAIL'}\n"
    )
    if getattr(args, "control", False):
        control = pml_accuracy_test(config, k=k, max_dofs=args.max_dofs, strength_override=0.0)
        ratio = control.rel_err / report.rel_err if report.rel_err > 0 else float("inf")
        out.write(
            f"control (a=0): rel_err={control.rel_err:.3e} "
            f"improvement x{ratio:.1f}\n"
        )
    return 0 if report.passed else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2

    try:
        if args.command == "accuracy":
            return _accuracy_gate(config, args, out)

        if args.command == "table":
            if args.strict:
                rc = _accuracy_gate(config, args, out)
                if rc != 0:
                    sys.stderr.write("error: accuracy gate failed, table not run\n")
                    return 1
            csv_path = os.path.join(args.out, "results.csv")
            rows = run_table(config, out_csv=csv_path, threads=args.threads,
                             max_dofs=args.max_dofs)
            bad = [r for r in rows if r.status != "ok"]
            for row in rows:
                out.write(
                    f"{row.method:>3} k={row.k:g} {row.n1}x{row.n2} {row.delta_rule:>12} "
                    f"iters={'' if row.iters is None else row.iters:>4} "
                    f"status={row.status}\n"
                )
            out.write(f"wrote {csv_path} ({len(rows)} rows, {len(bad)} not ok)\n")
            if args.strict and bad:
                return 1
            return 0

        if args.command == "rate":
            csv_path = os.path.join(args.out, "rate.csv")
            records = run_rate(config, out_csv=csv_path, max_dofs=args.max_dofs)
            n1, n2 = config.layouts[0]
            for rec in records:
                parts = [f"k={rec['k']:g}"]
                for m in config.methods:
                    v = rec.get(f"rho_{m}")
                    des = designated_iteration(m, n1, n2)
                    parts.append(f"rho_{m}(n={des})={'n/a' if v is None else format(v, '.4f')}")
                out.write("  ".join(parts) + "\n")
            out.write(f"wrote {csv_path}\n")
            return 0

        if args.command == "export-matrix":
            info = export_matrix(config, args.out, k=args.k, max_dofs=args.max_dofs)
            out.write(
                f"wrote {info['matrix']} and {info['load']} to {args.out} "
                f"(n={info['n']}, nnz={info['nnz']})\n"
            )
            return 0
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except Exception as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1

    return 0


if __name__ == "__main__":
    sys.exit(main())
