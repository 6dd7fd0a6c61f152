"""Command-line front end: ``wfusion <subcommand> [options]``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 resource
bound exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from .amplitude import Amplitude
from .fusion import ResourceBoundError, chain_analytic, fuse2_analytic, fuse3_analytic, fuse_dense
from .optics import Circuit, WiringError
from .planner import POLICIES, UnreachableTargetError, plan
from .protocols import compare_protocols, comparison_csv
from .pswap import CELL_NAMES, HERALD_SCALE, build_pswap_circuit, verify_gate

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_BOUND = 0, 1, 2, 3
OUTPUT_DIR_ENV = "WFUSION_OUTPUT_DIR"


class UsageError(Exception):
    pass


# -- formatting ----------------------------------------------------------------------

def _as_fraction(x):
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, Amplitude) and x.is_rational():
        return x.to_fraction()
    return None


def fmt(x) -> str:
    """``num/den (≈d.ddddd)`` for exact values, ``a + b√2`` for irrational ones."""
    f = _as_fraction(x)
    if f is not None:
        if f.denominator == 1:
            return str(f.numerator)
        return f"{f} (≈{float(f):.6g})"
    if isinstance(x, Amplitude):
        return f"{x} (≈{float(x):.6g})"
    if x is None:
        return "-"
    if isinstance(x, complex):
        x = x.real if abs(x.imag) < 1e-15 else x
    return f"{x:.6g}"


def fmt_scalar(x) -> str:
    if x == HERALD_SCALE:
        return "1/(2√2)"
    return fmt(x)


def to_json_value(x):
    f = _as_fraction(x)
    if f is not None:
        return {"num": f.numerator, "den": f.denominator}
    if isinstance(x, Amplitude):
        return {"text": str(x), "value": float(x)}
    if isinstance(x, complex):
        return x.real if abs(x.imag) < 1e-15 else {"re": x.real, "im": x.imag}
    return x


def _table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    line = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    out = [line, "  ".join("-" * w for w in widths)]
    out += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(out)


def _csv(headers, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(headers)
    w.writerows(rows)
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        path = Path(args.out)
        base = os.environ.get(OUTPUT_DIR_ENV)
        if base and not path.is_absolute():
            path = Path(base) / path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        print(f"wrote {path}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def parse_sizes(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"sizes must be comma-separated integers, got {text!r}") from None
    if any(s < 1 for s in sizes):
        raise argparse.ArgumentTypeError(f"sizes must be positive, got {text!r}")
    return sizes


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


# -- gate ------------------------------------------------------------------------------

def _load_circuit(path):
    if path is None:
        return build_pswap_circuit()
    try:
        circuit = Circuit.from_json(Path(path).read_text())
        circuit.validate()
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot load circuit {path}: {exc}") from exc
    return circuit


def _table3_rows(table, plain: bool = False) -> list[list[str]]:
    cell = (lambda p: str(_as_fraction(p) if _as_fraction(p) is not None else p)) if plain else fmt
    return [[r["basis_input"], str(tuple(r["pattern"]))] + [cell(p) for p in r["coincidence_probs"]] for r in table]


def cmd_gate_verify(args) -> int:
    check = verify_gate(_load_circuit(args.circuit), exact=args.backend == "exact")
    status = "PASS" if check.passed else "FAIL"
    if args.output == "json":
        _emit(args, _dump({
            "status": status,
            "backend": args.backend,
            "scalars": [{"pattern": list(p), "scalar": to_json_value(s)} for p, s in check.scalars.items()],
            "table": [{**r, "coincidence_probs": [to_json_value(p) for p in r["coincidence_probs"]]}
                      for r in check.table],
            "failures": check.failures,
        }))
    elif args.output == "csv":
        _emit(args, _csv(["basis_input", "pattern", *CELL_NAMES], _table3_rows(check.table, plain=True)))
    else:
        lines = []
        for p, s in check.scalars.items():
            lines.append(f"pattern {p}: scalar = {'not proportional' if s is None else fmt_scalar(s)}")
        lines.append(_table(["input", "pattern", *CELL_NAMES], _table3_rows(check.table)))
        if check.passed:
            lines.append("scalar = 1/(2√2); coincidence table reproduced; PASS")
        else:
            lines.append(f"FAIL: {check.failures[0]}")
        _emit(args, "\n".join(lines))
    if not check.passed:
        for f in check.failures:
            print(f, file=sys.stderr)
    return EXIT_OK if check.passed else EXIT_VERIFY


def cmd_gate_table3(args) -> int:
    check = verify_gate(_load_circuit(args.circuit), exact=args.backend == "exact")
    if args.output == "json":
        _emit(args, _dump([{**r, "coincidence_probs": [to_json_value(p) for p in r["coincidence_probs"]]}
                           for r in check.table]))
    elif args.output == "csv":
        _emit(args, _csv(["basis_input", "pattern", *CELL_NAMES], _table3_rows(check.table, plain=True)))
    else:
        _emit(args, _table(["input", "pattern", *CELL_NAMES], _table3_rows(check.table)))
    return EXIT_OK


# -- fusion ----------------------------------------------------------------------------

def _distribution(sizes, dense: bool, max_photons: int):
    if len(sizes) < 2:
        raise UsageError("fusion needs at least two sizes")
    if dense:
        return fuse_dense(sizes, max_photons)
    if len(sizes) == 2:
        return fuse2_analytic(*sizes)
    if len(sizes) == 3:
        return fuse3_analytic(*sizes)
    return chain_analytic(sizes)


def _residual_text(res) -> str:
    parts = []
    if res.fused:
        parts.append(f"W{res.fused}" + ("" if len(res.fused_parties) < 2 else
                                        "[" + ",".join(str(p + 1) for p in res.fused_parties) + "]"))
    parts += [f"W{r}[{i + 1}]" for i, r in enumerate(res.retained) if r]
    return " ".join(parts) or "-"


def _render_distribution(args, dist, extra: dict | None = None) -> str:
    if args.output == "json":
        d = dist.to_dict()
        d["classes"] = {c.value: to_json_value(p) for c, p in dist.by_class().items()}
        d.update(extra or {})
        return _dump(d)
    rows = [[e.pattern, e.outcome.value, fmt(e.probability), _residual_text(e.residual),
             fmt(e.fidelity) if e.fidelity is not None else "-"] for e in dist.entries]
    headers = ["pattern", "class", "probability", "residual", "fidelity"]
    if args.output == "csv":
        rows = [[e.pattern, e.outcome.value, str(e.probability), f"{float(e.probability):.6g}",
                 _residual_text(e.residual), "" if e.fidelity is None else str(e.fidelity)]
                for e in dist.entries]
        return _csv(["pattern", "class", "probability", "decimal", "residual", "fidelity"], rows)
    lines = [f"sizes {list(dist.sizes)} ({dist.method})", _table(headers, rows), ""]
    lines += [f"{c.value:>15}: {fmt(p)}" for c, p in dist.by_class().items()]
    lines.append(f"{'total':>15}: {fmt(dist.total())}")
    for k, v in (extra or {}).items():
        lines.append(f"{k}: {fmt(v) if not isinstance(v, (str, int)) else v}")
    return "\n".join(lines)


def cmd_fuse(args) -> int:
    dist = _distribution(args.sizes, args.dense, args.max_photons)
    _emit(args, _render_distribution(args, dist))
    return EXIT_OK


def cmd_chain(args) -> int:
    dist = _distribution(args.sizes, args.dense, args.max_photons)
    extra = {"fused_size": dist.fused_size}
    if args.output == "json":
        extra["success"] = to_json_value(dist.success)
    else:
        extra["success"] = dist.success
    _emit(args, _render_distribution(args, dist, extra))
    return EXIT_OK


# -- planning --------------------------------------------------------------------------

def _se(x) -> str:
    return "n/a" if x is None else f"{x:.3g}"


def cmd_plan(args) -> int:
    report = plan(args.target, args.primitive, args.policy, args.accounting,
                  trials=args.trials, seed=args.seed, n_jobs=args.jobs, exact=not args.approx)
    if args.output == "json":
        _emit(args, _dump(report.to_dict()))
        return EXIT_OK
    keys = ("primitives", "rounds", "gates")
    expected = (report.expected_primitives, report.expected_rounds, report.expected_gates)
    if args.output == "csv":
        emp = report.empirical
        header = ["quantity", "expected", "decimal"] + (["empirical_mean", "stderr"] if emp else [])
        rows = []
        for k, v in zip(keys, expected):
            row = [k, str(v), f"{float(v):.6g}"]
            if emp:
                row += [f"{emp.mean[k]:.6g}", _se(emp.stderr[k])]
            rows.append(row)
        _emit(args, _csv(header, rows))
        return EXIT_OK
    lines = [f"target W{report.target} from W{report.primitive} primitives; "
             f"policy {report.policy}; {report.accounting} accounting"]
    for k, v in zip(keys, expected):
        lines.append(f"  expected {k:<10} {fmt(v)}")
    lines += [f"  assumes: {a}" for a in report.assumptions]
    emp = report.empirical
    if emp is not None:
        lines.append(f"Monte Carlo: {emp.trials} trials, seed {emp.seed}")
        for k in keys:
            lines.append(f"  {k:<10} {emp.mean[k]:.6g} ± {_se(emp.stderr[k])}")
        if report.accounting == "physical" and emp.herald_rate is not None:
            lines.append(f"  herald rate {emp.herald_rate:.6g}")
        for (a, b), st in sorted(emp.pair_stats.items(), reverse=True):
            lines.append(f"  fuse W{a}+W{b}: {st['attempts']} attempts, {st['success']} successes")
    _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_compare(args) -> int:
    rows = compare_protocols(args.sizes)
    for r in rows:
        for issue in r.issues:
            print(f"warning: {r.protocol} {list(r.sizes)}: {issue}", file=sys.stderr)
    if args.output == "json":
        _emit(args, _dump([r.to_dict() for r in rows]))
    elif args.output == "csv":
        _emit(args, comparison_csv(rows))
    else:
        headers = ["protocol", "result", "success", "recycle", "fail", "ancilla", "2q gates", "CNOT-only"]
        table = []
        for r in rows:
            fail = fmt(r.probs.fail)
            if r.corrected_fail is not None:
                fail += f" [complement {fmt(r.corrected_fail)}]"
            table.append([r.label, f"W{r.result_size}", fmt(r.probs.success), fmt(r.probs.recycle), fail,
                          "H" if r.ancilla else "-", str(r.two_qubit_gates),
                          "-" if r.cnot_only_gates is None else str(r.cnot_only_gates)])
        _emit(args, _table(headers, table))
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wfusion", description="W-state fusion with partial-swap gates")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--output", choices=("pretty", "json", "csv"), default="pretty",
                       help="report format (default: pretty)")
        p.add_argument("-o", "--out", metavar="PATH",
                       help=f"write the report to PATH (relative paths resolve under ${OUTPUT_DIR_ENV})")
        return p

    for name, func, help_ in (("gate-verify", cmd_gate_verify, "check the optical gate against N"),
                              ("gate-table3", cmd_gate_table3, "print the coincidence table")):
        p = common(sub.add_parser(name, help=help_))
        p.add_argument("--circuit", metavar="FILE", help="circuit JSON to check instead of the built-in one")
        p.add_argument("--backend", choices=("exact", "float"), default="exact")
        p.set_defaults(func=func)

    for name, func, help_ in (("fuse", cmd_fuse, "outcome distribution of one fusion"),
                              ("chain", cmd_chain, "chained fusion of k registers")):
        p = common(sub.add_parser(name, help=help_))
        p.add_argument("--sizes", type=parse_sizes, required=True, metavar="N,M[,T...]")
        p.add_argument("--dense", action="store_true", help="simulate the Fock states explicitly")
        p.add_argument("--max-photons", type=positive_int, default=14)
        p.set_defaults(func=func)

    p = common(sub.add_parser("plan", help="repeat-until-success resource estimate"))
    p.add_argument("--target", type=positive_int, required=True)
    p.add_argument("--primitive", type=positive_int, required=True)
    p.add_argument("--policy", choices=tuple(POLICIES), default="greedy-largest")
    p.add_argument("--accounting", choices=("ideal", "physical"), default="ideal")
    p.add_argument("--trials", type=int, default=0, help="Monte Carlo trials (0: analytic only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=positive_int, default=1, help="worker processes for Monte Carlo")
    p.add_argument("--approx", action="store_true", help="solve the cost equations in floating point")
    p.set_defaults(func=cmd_plan)

    p = common(sub.add_parser("compare", help="reference protocol comparison"))
    p.add_argument("--sizes", type=parse_sizes, required=True, metavar="N,M[,T...]")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ResourceBoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BOUND
    except UnreachableTargetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, WiringError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
