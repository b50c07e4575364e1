"""Command-line front end.

Exit codes: 0 success, 1 verification failure (or a computation that could
not be certified), 2 input error. Data goes to stdout, diagnostics to stderr.
Indices on the command line and in JSON output are 1-based.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from .alignment import Subspace, align_index_subspace, align_subspace, ext_real_json
from .duality import (
    OffCertificate, ThetaCertificate, dualize, verify_off_certificate, verify_theta_certificate,
)
from .geometry import PointConfig, alpha_index, hull_vertices
from .numerics import DEFAULT_TOL, GramlaxError, InputError, SolverError, StructuralError, Tolerances
from .rank2 import PipelineError, rank2_pipeline
from .search import SearchConfig, solve, welch_bound

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
TOL_ENV = "GRAMLAX_TOL"
RANK2_EPS_TOL = 1e-9


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# input


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None


def load_subspace(path: str, tol: Tolerances) -> Subspace:
    data = _load_json(path)
    if not isinstance(data, dict) or "basis" not in data:
        raise InputError(f"{path}: expected an object with 'n' and 'basis'")
    cols = np.array(data["basis"], dtype=float)
    if cols.ndim != 2:
        raise InputError(f"{path}: 'basis' must be a list of equal-length columns")
    n = int(data.get("n", cols.shape[1]))
    if cols.shape[1] != n:
        raise InputError(f"{path}: basis columns have length {cols.shape[1]}, expected n={n}")
    if not np.any(cols):
        return Subspace.zero(n)
    return Subspace.span(cols.T, tol)


def load_config(path: str) -> PointConfig:
    data = _load_json(path)
    if isinstance(data, dict):
        if "points" not in data:
            raise InputError(f"{path}: expected an object with 'd' and 'points'")
        pts = np.array(data["points"], dtype=float)
        if "d" in data and (pts.ndim != 2 or pts.shape[1] != int(data["d"])):
            raise InputError(f"{path}: points do not have dimension d={data['d']}")
    else:
        pts = np.array(data, dtype=float)
    if pts.ndim != 2:
        raise InputError(f"{path}: points must be a list of equal-length vectors")
    return PointConfig(pts)


def load_certificate(path: str, d_override: int | None = None):
    """Certificate JSON as emitted by dualize, solve or rank2; returns (off, U or None)."""
    data = _load_json(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object")
    if "certificate" in data:
        data = data["certificate"]
    elif "Q_prime" in data:
        data = {"n": data["n"], "d": 2, "G": data["Q_prime"], "eps": data["eps"]}
    if d_override is not None:
        data = {**data, "d": d_override}
    off = OffCertificate.from_dict(data)
    U = data.get("U")
    return off, None if U is None else np.array(U, dtype=float)


def tolerances(args) -> Tolerances:
    tol = DEFAULT_TOL
    env = os.environ.get(TOL_ENV)
    if env:
        try:
            tol = tol.with_overrides(residual_tol=float(env))
        except ValueError:
            raise InputError(f"{TOL_ENV} must be a positive number, got {env!r}") from None
    return tol.with_overrides(rank_tol=args.rank_tol, lp_pivot_tol=args.lp_pivot_tol,
                              residual_tol=args.residual_tol, psd_tol=args.psd_tol)


# --------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _pretty(obj, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    for key, value in obj.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines += _pretty(value, indent + 1)
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"{pad}{key}:")
            for item in value:
                lines.append(f"{pad}  -")
                lines += _pretty(item, indent + 2)
        elif isinstance(value, list) and value and isinstance(value[0], list):
            lines.append(f"{pad}{key}:")
            for row in value:
                lines.append(f"{pad}  " + " ".join(f"{_fmt(x):>14}" for x in row))
        elif isinstance(value, list):
            lines.append(f"{pad}{key}: " + " ".join(_fmt(x) for x in value))
        else:
            lines.append(f"{pad}{key}: {_fmt(value)}")
    return lines


def _csv(header: list[str], rows) -> str:
    out = [",".join(header)]
    out += [",".join(repr(x) if isinstance(x, float) else str(x) for x in row) for row in rows]
    return "\n".join(out) + "\n"


def _emit(out, fmt: str, obj, csv_rows=None) -> None:
    if fmt == "json":
        out.write(json.dumps(obj, indent=2, allow_nan=False) + "\n")
    elif fmt == "csv":
        if csv_rows is None:
            raise InputError("this command has no CSV form")
        out.write(_csv(*csv_rows))
    else:
        out.write("\n".join(_pretty(obj)) + "\n")


def _matrix_csv(m) -> tuple[list[str], list]:
    m = np.asarray(m)
    return [f"c{j + 1}" for j in range(m.shape[1])], [[float(x) for x in row] for row in m]


# --------------------------------------------------------------------------
# commands


def cmd_align(args, tol, out) -> int:
    A = load_subspace(args.subspace, tol)
    if args.index is not None:
        if not 1 <= args.index <= A.n:
            raise InputError(f"--index must lie in 1..{A.n}")
        certs = [align_index_subspace(A, args.index - 1, tol)]
        value = certs[0].value
    else:
        value, certs = align_subspace(A, tol)
    obj = {"n": A.n, "k": A.k, "align": ext_real_json(value),
           "certificates": [c.to_dict() for c in certs]}
    rows = [[c.index + 1, ext_real_json(c.value)] for c in certs]
    _emit(out, args.format, obj, (["index", "value"], rows))
    return EXIT_OK


def cmd_alpha(args, tol, out) -> int:
    S = load_config(args.config)
    if args.emit_polygon and S.d != 2:
        raise InputError("--emit-polygon needs a planar configuration")
    certs = [alpha_index(S, i, tol) for i in range(S.n)]
    obj = {"n": S.n, "d": S.d, "max_alpha": max(c.value for c in certs),
           "alphas": [c.to_dict() for c in certs]}
    if args.emit_polygon:
        obj["polygons"] = [{"index": i + 1,
                            "vertices": [[float(x) for x in v] for v in hull_vertices(S, i)]}
                           for i in range(S.n)]
    rows = [[c.index + 1, float(c.value)] for c in certs]
    _emit(out, args.format, obj, (["index", "alpha"], rows))
    return EXIT_OK


def cmd_dualize(args, tol, out) -> int:
    cert = dualize(load_subspace(args.subspace, tol), tol)
    _emit(out, args.format, cert.to_dict(), _matrix_csv(cert.G))
    return EXIT_OK


def cmd_rank2(args, tol, out) -> int:
    if args.n < 3:
        raise InputError("rank2 needs --n >= 3")
    report = rank2_pipeline(args.n, tol)
    obj = report.to_dict()
    _emit(out, args.format, obj, _matrix_csv(report.Q_prime))
    gap = abs(report.eps - math.cos(math.pi / args.n))
    if not report.psd or gap > RANK2_EPS_TOL:
        print(f"rank2: psd={report.psd}, |eps - cos(pi/n)| = {gap:.3g}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _search_config(args, n: int, d: int, tol: Tolerances) -> SearchConfig:
    iters = args.max_iters
    if iters is None:
        iters = 200 if d == 2 else 300
    return SearchConfig(n, d, restarts=args.restarts, max_iters=iters, seed=args.seed, tol=tol)


def cmd_solve(args, tol, out) -> int:
    if args.n < 1 or args.d < 1:
        raise InputError("--n and --d must be positive")
    result = solve(args.n, args.d, _search_config(args, args.n, args.d, tol))
    if args.history:
        with open(args.history, "w", encoding="utf-8") as fh:
            fh.write(result.history_csv())
    rows = [[k, float(v)] for k, v in enumerate(result.history)]
    _emit(out, args.format, result.to_dict(), (["iteration", "max_alpha"], rows))
    return EXIT_OK


def cmd_verify(args, tol, out) -> int:
    off, U = load_certificate(args.certificate)
    if args.theta:
        theta = ThetaCertificate.from_off(off)
        if U is not None:
            theta = ThetaCertificate(off, theta.min_eigenvalue, U)
        report = verify_theta_certificate(theta, tol)
    else:
        report = verify_off_certificate(off, tol)
    obj = {"n": off.n, "d": off.d, "eps": off.eps, **report.to_dict()}
    rows = [[c.name, c.residual, c.threshold, c.passed] for c in report.checks]
    _emit(out, args.format, obj, (["check", "residual", "threshold", "passed"], rows))
    if not report.passed:
        print("verification failed: " + ", ".join(report.failed()), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_table(args, tol, out) -> int:
    if args.d != 2:
        raise InputError("table is only available for --d 2")
    if not 3 <= args.n_from <= args.n_to:
        raise InputError("need 3 <= --n-from <= --n-to")
    rows = []
    for n in range(args.n_from, args.n_to + 1):
        eps = solve(n, 2, _search_config(args, n, 2, tol)).certificate.eps
        exact = math.cos(math.pi / n)
        rows.append([n, float(eps), exact, welch_bound(n, 2), float(eps - exact)])
    header = ["n", "eps", "cos_pi_over_n", "welch", "gap"]
    obj = {"d": 2, "rows": [dict(zip(header, r)) for r in rows]}
    _emit(out, args.format, obj, (header, rows))
    return EXIT_OK


def cmd_welch(args, tol, out) -> int:
    value = welch_bound(args.n, args.d)
    if args.format == "json":
        out.write(json.dumps(value) + "\n")
    else:
        _emit(out, args.format, {"n": args.n, "d": args.d, "welch": value},
              (["n", "d", "welch"], [[args.n, args.d, value]]))
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "pretty"), default=None)
    common.add_argument("--rank-tol", type=float)
    common.add_argument("--lp-pivot-tol", type=float)
    common.add_argument("--residual-tol", type=float)
    common.add_argument("--psd-tol", type=float)
    common.add_argument("--verbose", action="store_true", help="report timing on stderr")

    searching = _Parser(add_help=False)
    searching.add_argument("--restarts", type=int, default=20)
    searching.add_argument("--seed", type=int, default=0)
    searching.add_argument("--max-iters", type=int, default=None)

    parser = _Parser(prog="gramlax", description="Low-rank unit-diagonal matrices and antipodal codes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("align", parents=[common], help="alignment of a subspace")
    p.add_argument("--subspace", required=True)
    p.add_argument("--index", type=int)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("alpha", parents=[common], help="alpha values of a configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--emit-polygon", action="store_true",
                   help="include the hull vertices of each H(S_i) (planar only)")
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("dualize", parents=[common], help="dual matrix of a subspace")
    p.add_argument("--subspace", required=True)
    p.set_defaults(func=cmd_dualize)

    p = sub.add_parser("rank2", parents=[common], help="rank-2 symmetrisation pipeline")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_rank2)

    p = sub.add_parser("solve", parents=[common, searching], help="search for small eps")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--history", help="write the per-iteration history as CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common], help="check a certificate")
    p.add_argument("--certificate", required=True)
    p.add_argument("--theta", action="store_true", help="also require a PSD Gram matrix")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("table", parents=[common, searching], help="planar search table as CSV")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n-from", type=int, required=True)
    p.add_argument("--n-to", type=int, required=True)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("welch", parents=[common], help="Welch lower bound")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_welch)
    return parser


def run(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        if args.format is None:
            args.format = "csv" if args.command == "table" else "json"
        tol = tolerances(args)
        start = time.perf_counter()
        code = args.func(args, tol, out)
        if args.verbose:
            print(f"{args.command}: {time.perf_counter() - start:.3f} s", file=sys.stderr)
        return code
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (InputError, StructuralError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PipelineError, SolverError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except GramlaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run())
