"""Command-line front end.

Exit codes: 0 on success, 2 when the input fails validation (bad problem
file, evaluation point inside the window guard, malformed arguments) and 3
when a solver fails (singular or ill-conditioned system, rank-deficient fit,
too few absorbed walkers).
"""

import argparse
import csv
import io
import json
import sys

import numpy as np

from .asymptotics import SingularSystemError, solve_asymptotic
from .geometry import ValidationError, load_problem, validate
from .montecarlo import InsufficientWalkersError, simulate
from .neumann import NeumannKernel
from .robin_bie import IllConditionedError, solve_robin
from .tables import RankDeficientFitError, fit_series, table_rows

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3

METHODS = ("asymptotic", "bie", "mc", "all")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _point(text):
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y but got {text!r}") from None
    return (x, y)


def _format_value(v, display):
    if isinstance(v, float):
        return f"{v:.5f}" if display else format(v, ".17g")
    return "" if v is None else str(v)


def write_rows(rows, fmt, out, display=False, meta=None):
    """Serialize ``rows`` (list of dicts) as CSV or JSON to ``out`` (path or ``None``)."""
    if fmt == "json":
        doc = dict(meta or {})
        doc["rows"] = rows
        text = json.dumps(doc, indent=2) + "\n"
    else:
        cols = []
        for r in rows:
            cols.extend(k for k in r if k not in cols)
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(cols)
        for r in rows:
            wr.writerow([_format_value(r.get(c), display) for c in cols])
        text = buf.getvalue()
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def read_rows(path):
    """Inverse of :func:`write_rows` for CSV or JSON files."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return json.loads(text)["rows"]
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        rows.append({k: _parse(v) for k, v in r.items()})
    return rows


def _parse(v):
    if v == "":
        return None
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def _load(args):
    if not args.problem:
        raise CliError("--problem is required", EXIT_INVALID)
    try:
        return load_problem(args.problem)
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read problem file: {exc}", EXIT_INVALID) from None


def _mc_kwargs(args):
    return {"dt": args.dt, "n_walkers": args.walkers, "seed": args.seed}


def _default_points(spec):
    if spec.head.kind == "unit-disk":
        return [(0.0, 0.0)]
    return [tuple(float(v) for v in spec.head.centroid())]


def cmd_eval(args):
    spec = _load(args)
    points = args.at or _default_points(spec)
    methods = ("asymptotic", "bie", "mc") if args.method == "all" else (args.method,)
    kernel = NeumannKernel(spec.head)
    rows = []
    for method in methods:
        if method == "asymptotic":
            sol = solve_asymptotic(spec, kernel)
            for p in points:
                rows.append({"method": method, "x": p[0], "y": p[1], "u": float(sol.u(p)), "order": sol.error_order})
        elif method == "bie":
            kw = {} if args.resolution is None else {"resolution": args.resolution}
            sol = solve_robin(spec, kernel, **kw)
            for p in points:
                rows.append({"method": method, "x": p[0], "y": p[1], "u": float(sol.u(p)), "residual": sol.residual})
        else:
            for p in points:
                st = simulate(spec, p, **_mc_kwargs(args))
                rows.append({"method": method, "x": p[0], "y": p[1], "u": st.mean_fpt, "stderr": st.stderr})
    write_rows(rows, args.format, args.out, meta={"command": "eval"})


def cmd_table(args):
    method = args.method or "bie"
    if method == "mc":
        raise CliError("table supports --method asymptotic, bie or all", EXIT_INVALID)
    mc = _mc_kwargs(args) if method == "all" else None
    rows = table_rows(args.which, bie=method != "asymptotic", mc=mc, resolution=args.resolution)
    write_rows(rows, args.format, args.out, display=args.display, meta={"command": "table", "table": args.which})


def cmd_fit(args):
    try:
        rows = read_rows(args.series) if args.series != "-" else _rows_from_stdin()
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot read series: {exc}", EXIT_INVALID) from None
    if not rows:
        raise CliError("series is empty", EXIT_INVALID)
    keys = list(rows[0])
    eps_key = "eps" if "eps" in keys else keys[0]
    column = args.column or next((k for k in ("u_bie", "u", "value", "u_asym") if k in keys), keys[-1])
    if column not in keys:
        raise CliError(f"column {column!r} not in series", EXIT_INVALID)
    fit = fit_series([r[eps_key] for r in rows], [r[column] for r in rows])
    rec = fit.to_record()
    rec["column"] = column
    write_rows([rec], args.format, args.out, meta={"command": "fit"})


def _rows_from_stdin():
    text = sys.stdin.read()
    if text.lstrip().startswith("{"):
        return json.loads(text)["rows"]
    return [{k: _parse(v) for k, v in r.items()} for r in csv.DictReader(io.StringIO(text))]


def cmd_validate(args):
    spec = _load(args)
    rep = validate(spec)
    row = {"ok": rep.ok, "problems": "; ".join(rep.problems), "warnings": "; ".join(rep.warnings)}
    write_rows([row], args.format, args.out, meta={"command": "validate"})
    if not rep.ok:
        for p in rep.problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_density_dump(args):
    spec = _load(args)
    kw = {} if args.resolution is None else {"resolution": args.resolution}
    sol = solve_robin(spec, **kw)
    rows = [
        {"window_index": i, "t": float(t), "phi": float(v)}
        for i, ph in enumerate(sol.density.phi)
        for t, v in zip(sol.density.t, ph)
    ]
    write_rows(rows, args.format, args.out, meta={"command": "density-dump", "C_eps": sol.C_eps, "residual": sol.residual})


def cmd_mc(args):
    spec = _load(args)
    points = args.at or _default_points(spec)
    rows = []
    for p in points:
        st = simulate(spec, p, **_mc_kwargs(args))
        rec = {"x": p[0], "y": p[1]}
        rec.update(st.to_record())
        rows.append(rec)
        if args.histogram:
            st.write_histogram(args.histogram)
    write_rows(rows, args.format, args.out, meta={"command": "mc"})


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="output file (default: stdout)")

    problem = argparse.ArgumentParser(add_help=False)
    problem.add_argument("--problem", help="problem file (JSON)")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--resolution", type=int, help="boundary-integral nodes per window")
    solver.add_argument("--dt", type=float, help="Monte Carlo time step")
    solver.add_argument("--walkers", type=int, default=20000, help="Monte Carlo walkers")
    solver.add_argument("--seed", type=int, default=0, help="Monte Carlo seed")

    at = argparse.ArgumentParser(add_help=False)
    at.add_argument("--at", type=_point, action="append", metavar="X,Y", help="evaluation point (repeatable)")

    parser = argparse.ArgumentParser(prog="narrowescape", description="Narrow-escape MFPT through thin necks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common, problem, solver, at], help="evaluate the MFPT at points")
    p.add_argument("--method", choices=METHODS, default="asymptotic")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("table", parents=[common, solver], help="built-in benchmark tables")
    p.add_argument("which", choices=("L", "eps", "fit"))
    p.add_argument("--method", choices=("asymptotic", "bie", "all"), help="columns to compute (default bie)")
    p.add_argument("--display", action="store_true", help="5-decimal output")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("fit", parents=[common], help="fit a/eps + b ln eps + c to a series")
    p.add_argument("series", help="CSV or JSON series file, or - for stdin")
    p.add_argument("--column", help="value column (default u_bie, u, value or u_asym)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("validate", parents=[common, problem], help="check a problem file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("density-dump", parents=[common, problem, solver], help="boundary-integral window fluxes")
    p.set_defaults(func=cmd_density_dump)

    p = sub.add_parser("mc", parents=[common, problem, solver, at], help="Monte Carlo estimate")
    p.add_argument("--histogram", help="write the first-passage-time histogram CSV here")
    p.set_defaults(func=cmd_mc)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (IllConditionedError, SingularSystemError, RankDeficientFitError, InsufficientWalkersError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValidationError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
