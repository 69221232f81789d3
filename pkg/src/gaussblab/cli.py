"""Command-line front end: JSON body specs in, JSON or CSV reports out.

Every subcommand is deterministic given its flags; the exit status is 0
when the invariants the command checks hold, 1 when one fails and 2 on
usage or input errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import acceptance, bineq, gauss, mgm, stability
from .corpus import corpus_id, standard_corpus
from .errors import GaussblabError
from .functions import FunctionSpec
from .schema import load_body, load_function
from .stability import ConstantsRecord

SEED_ENV = "GAUSSBLAB_SEED"


@dataclass
class Report:
    data: object
    ok: bool = True
    fields: Optional[tuple] = None
    rows: Optional[list] = None


# ---------------------------------------------------------------------------
# serialization


def _plain(obj):
    """Recursively convert numpy scalars and arrays to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        out = {}
        for k in sorted(obj):
            out.update(_flatten(obj[k], f"{prefix}{k}."))
        return out
    if isinstance(obj, list):
        out = {}
        for i, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}{i}."))
        return out
    return {prefix[:-1]: obj}


def _cell(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def render(report: Report, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_plain(report.data), indent=2, sort_keys=True) + "\n"
    if report.fields is None:
        flat = _flatten(_plain(report.data))
        fields, rows = tuple(flat), [list(flat.values())]
    else:
        fields, rows = report.fields, [_plain(list(r)) for r in report.rows]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# argument helpers


def _vector(text):
    """A vector from JSON (``[1, 2]``) or comma-separated text (``1,2``)."""
    text = text.strip()
    vals = json.loads(text) if text.startswith("[") else [float(t) for t in text.split(",") if t]
    return np.asarray(vals, dtype=float)


def _matrix(text):
    return np.asarray(json.loads(text), dtype=float)


def _grid(text):
    """``start:stop:step`` (stop inclusive) or a comma list."""
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        if step <= 0:
            raise argparse.ArgumentTypeError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(count)]
    return [float(t) for t in text.split(",") if t]


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw not in (None, "") else 0


def _kw(args, **extra):
    kw = {"seed": args.seed}
    if args.samples is not None:
        kw["samples"] = args.samples
    kw.update(extra)
    return kw


def _constants(args):
    """The ``--constants`` record, else the calibrated record shipped with the package."""
    if args.constants:
        return ConstantsRecord.load(args.constants)
    return stability.calibrated_constants()


# ---------------------------------------------------------------------------
# commands


def cmd_measure(args):
    body = load_body(args.body)
    est = gauss.measure(body, args.engine, partition_count=args.partition_count, **_kw(args))
    return Report(est.to_dict())


def cmd_moments(args):
    body = load_body(args.body)
    mom = gauss.moments(body, partition_count=args.partition_count, engine=args.engine, **_kw(args))
    return Report(mom.to_dict())


def _deficit_report(rep, k=3.0):
    return Report(rep.to_dict(), rep.holds(k), bineq.DeficitReport.CSV_FIELDS, [rep.csv_row()])


def cmd_deficit(args):
    body = load_body(args.body)
    rep = bineq.deficit(body, args.a, args.b, args.engine, partition_count=args.partition_count,
                        **_kw(args))
    return _deficit_report(rep)


def cmd_strong_deficit(args):
    body = load_body(args.body)
    rep = bineq.strong_deficit(body, _vector(args.x), _vector(args.y), args.engine,
                               partition_count=args.partition_count, **_kw(args))
    return _deficit_report(rep)


def cmd_hessian(args):
    body = load_body(args.body)
    d = _vector(args.d) if args.d else np.ones(body.dim)
    h = bineq.log_measure_hessian(body, d, args.t, partition_count=args.partition_count,
                                  engine=args.engine, **_kw(args))
    return Report(h.to_dict(), h.value <= 3.0 * h.std_error + 1e-12)


def cmd_midpoint_gap(args):
    body = load_body(args.body)
    g = bineq.midpoint_gap_identity(body, _vector(args.x), _vector(args.y), args.quad_nodes,
                                    partition_count=args.partition_count, engine=args.engine,
                                    **_kw(args))
    return Report(g.to_dict() | {"ok": g.ok}, g.ok)


def cmd_dichotomy(args):
    k = _constants(args)
    if args.body:
        d = stability.dichotomy_quantity(load_body(args.body), k, **_kw(args))
        rows = [("body", d)]
    else:
        samples = args.samples or acceptance.CALIBRATION_SAMPLES
        rows = stability.corpus_dichotomies(standard_corpus(args.corpus_seed), k, args.seed, samples)
    fields = ("label", "Q", "Q_error", "r", "n", "mass", "perimeter", "ball_moment", "verdict",
              "needed_C")
    table = [[label, d.Q, d.Q_error, d.r, d.n, d.mass, d.perimeter, d.ball_moment, d.verdict,
              d.needed_C] for label, d in rows]
    data = {label: d.to_dict() for label, d in rows}
    return Report(data, all(d.verdict != "violated" for _, d in rows), fields, table)


def cmd_audit(args):
    k = _constants(args)
    if args.kind in ("iso_big", "iso_small", "strip_perimeter"):
        if not args.body:
            raise GaussblabError(f"audit {args.kind} needs --body")
        params = {"body": load_body(args.body)}
    elif args.kind == "ball_mass":
        params = {"n": args.n}
    elif args.kind == "ball_moment":
        params = {"n": args.n, "r": args.r}
    else:
        params = {"R": args.R}
    rows = stability.bound_audit(args.kind, params, k, **_kw(args))
    data = [r.to_dict() | {"holds": r.holds} for r in rows]
    for d in data:
        d["params"] = {key: v for key, v in d["params"].items() if key != "body"}
    return Report(data, all(r.holds for r in rows), stability.AuditRow.CSV_FIELDS,
                  [r.csv_row() for r in rows])


def cmd_strip_sharpness(args):
    rows = stability.strip_sharpness(args.a, args.b, args.r_grid)
    data = [{"R": R, "epsilon": e, "C": c} for R, e, c in rows]
    return Report(data, all(e >= 0 for _, e, _ in rows), ("R", "epsilon", "C"), rows)


def _function(args, body):
    if args.function:
        f = load_function(args.function)
    else:
        f = FunctionSpec.polynomial({tuple(1 if i == 0 else 0 for i in range(body.dim)): 1.0},
                                    body.dim)
    return f


def cmd_trace_check(args):
    body = load_body(args.body)
    tc = stability.trace_check(body, _function(args, body), **_kw(args))
    return Report(tc.to_dict(), tc.holds)


def cmd_poincare_witness(args):
    body = load_body(args.body)
    w = stability.poincare_stability_witness(body, _function(args, body), **_kw(args))
    return Report(w.to_dict(), w.gradient_holds)


def cmd_quad_check(args):
    body = load_body(args.body)
    T = _matrix(args.matrix) if args.matrix else np.eye(body.dim)
    qc = stability.quad_boundary_check(body, T, _constants(args), **_kw(args))
    ok = not qc.flag and all(r.B <= r.rhs + 3 * r.B_error for r in qc.rows)
    fields = ("index", "B", "B_error", "rhs", "implied_constant")
    return Report(qc.to_dict(), ok, fields,
                  [[r.index, r.B, r.B_error, r.rhs, r.implied_constant] for r in qc.rows])


def cmd_calibrate(args):
    samples = args.samples or acceptance.CALIBRATION_SAMPLES
    rec = stability.calibrate_constants(standard_corpus(args.corpus_seed), args.seed, samples,
                                        corpus_id(args.corpus_seed))
    return Report(rec.to_dict())


def cmd_mgm(args):
    body = load_body(args.body)
    res = mgm.mgm_solve(body, args.tol, args.max_iter, args.step, **_kw(args))
    fields = mgm.MgmResult.CSV_FIELDS
    return Report(res.to_dict(), res.converged, fields,
                  [[t[f] for f in fields] for t in res.trajectory])


def cmd_mgm_uniqueness(args):
    body = load_body(args.body)
    uq = mgm.uniqueness_experiment(body, args.starts, args.tol, args.max_iter, args.step,
                                   **_kw(args))
    ok = (not uq.asserted) or (uq.gap_resolved and uq.max_procrustes <= 1e-2)
    return Report(uq.to_dict() | {"gap_resolved": uq.gap_resolved}, ok)


def cmd_verify_all(args):
    k = _constants(args)
    log = None if args.quiet else (lambda line: print(line, file=sys.stderr, flush=True))
    results = acceptance.run_all(args.seed, k, args.only, log)
    fields = ("number", "name", "passed", "detail")
    return Report([r.to_dict() for r in results], all(r.passed for r in results), fields,
                  [[r.number, r.name, r.passed, r.detail] for r in results])


# ---------------------------------------------------------------------------
# parser


def _common(p, samples=True):
    p.add_argument("--seed", type=int, default=_default_seed(),
                   help=f"master seed (default: ${SEED_ENV} or 0)")
    if samples:
        p.add_argument("--samples", type=int, default=None, help="Monte Carlo sample count")
    p.add_argument("--partition-count", type=int, default=1,
                   help="number of sample partitions; fixes the stream layout (default 1)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", default=None, help="report path (default: stdout)")
    p.add_argument("--constants", default=None,
                   help="ConstantsRecord JSON file (default: the shipped calibrated record)")


def _body_arg(p, required=True):
    p.add_argument("--body", required=required, help="body JSON file or inline JSON text")


def _engine_arg(p, choices=("auto", "closed_form", "monte_carlo")):
    p.add_argument("--engine", choices=choices, default="auto")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gaussblab",
                                 description="Gaussian measures of symmetric convex bodies.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, help, samples=True):
        p = sub.add_parser(name, help=help)
        _common(p, samples)
        p.set_defaults(func=func)
        return p

    p = add("measure", cmd_measure, "Gaussian measure of a body")
    _body_arg(p)
    _engine_arg(p)
    p = add("moments", cmd_moments, "restricted Gaussian moments")
    _body_arg(p)
    _engine_arg(p, ("auto", "monte_carlo"))
    p = add("deficit", cmd_deficit, "scalar B-inequality deficit at (a, b)")
    _body_arg(p)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    _engine_arg(p)
    p = add("strong-deficit", cmd_strong_deficit, "coordinatewise deficit at scalings x, y")
    _body_arg(p)
    p.add_argument("--x", required=True, help="vector, e.g. 0,0 or [0, 0]")
    p.add_argument("--y", required=True)
    _engine_arg(p)
    p = add("hessian", cmd_hessian, "second derivative of log gamma(e^{td} K)")
    _body_arg(p)
    p.add_argument("--d", default=None, help="direction (default: all ones)")
    p.add_argument("--t", type=float, default=0.0)
    _engine_arg(p, ("auto", "monte_carlo"))
    p = add("midpoint-gap", cmd_midpoint_gap, "midpoint-gap identity along a segment")
    _body_arg(p)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--quad-nodes", type=int, default=64)
    _engine_arg(p, ("auto", "monte_carlo"))
    p = add("dichotomy", cmd_dichotomy, "dichotomy quantity Q and branch (body or corpus)")
    _body_arg(p, required=False)
    p.add_argument("--corpus-seed", type=int, default=0)
    p = add("audit", cmd_audit, "elementary bound audits")
    p.add_argument("--kind", required=True, choices=("iso_big", "iso_small", "strip_perimeter",
                                                      "ball_mass", "ball_moment", "komatsu"))
    _body_arg(p, required=False)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--R", type=float, default=1.0)
    p = add("strip-sharpness", cmd_strip_sharpness, "closed-form strip deficit sweep",
            samples=False)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--r-grid", type=_grid, default=_grid("1:5:0.5"),
                   help="start:stop:step (inclusive) or comma list")
    p = add("trace-check", cmd_trace_check, "Gaussian trace inequality for g on a body")
    _body_arg(p)
    p.add_argument("--function", default=None, help="function JSON (default: x_1)")
    p = add("poincare-witness", cmd_poincare_witness, "Poincare stability witness for f")
    _body_arg(p)
    p.add_argument("--function", default=None, help="function JSON (default: x_1)")
    p = add("quad-check", cmd_quad_check, "boundary check for a quadratic form T")
    _body_arg(p)
    p.add_argument("--matrix", default=None, help="positive definite T as JSON (default: I)")
    p = add("calibrate", cmd_calibrate, "fit the constants on the standard corpus")
    p.add_argument("--corpus-seed", type=int, default=0)
    p = add("mgm", cmd_mgm, "ascend to the maximal Gaussian measure position")
    _body_arg(p)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--step", type=float, default=0.5)
    p = add("mgm-uniqueness", cmd_mgm_uniqueness, "MGM from several random starts")
    _body_arg(p)
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--step", type=float, default=0.5)
    p = add("verify-all", cmd_verify_all, "run every acceptance criterion", samples=False)
    p.add_argument("--only", type=lambda s: [int(t) for t in s.split(",")], default=None,
                   help="comma list of criterion numbers")
    p.add_argument("--quiet", action="store_true", help="do not stream the pass/fail lines")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.partition_count < 1:
        print("error: --partition-count must be at least 1", file=sys.stderr)
        return 2
    try:
        report = args.func(args)
    except (GaussblabError, ValueError, OSError, KeyError, TypeError) as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 2
    text = render(report, args.format)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report.ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
