"""Command-line front end.

Usage::

    resonance-tracer <study> --model <path|name> [options] [-o <path>]

Studies
-------
frf              forced response over an omega window at one lambda
trace-phase-lag  resonance curve over a lambda window, phase-lag condition
trace-tangent    resonance curve over a lambda window, horizontal tangent
solutions-at     every resonance point at one lambda (arclength curve first)
branch-probe     grow forced responses from those points, group them by branch
verify-jacobian  analytical vs finite-difference Jacobians at random states
complexity       operation-count ratios of the two resonance conditions
frf-batch        several ``frf`` runs at a list of lambda values, in parallel

Exit codes: 0 success; 2 usage error; 3 file not found; 4 schema violation;
5 study failure (partial results are still written). Errors go to stderr as
one line ``resonance-tracer: error=<kind> study=<study> message=<text>``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .continuation import (
    ARCLENGTH,
    SEQUENTIAL,
    Branch,
    BranchPoint,
    ContinuationSettings,
    branch_connectivity,
    detect_local_maxima,
    find_turning_points,
    frequency_response,
    resonance_curve,
    solutions_at_parameter,
)
from .hbm import AftGrid, hbm_jacobians, hbm_residual
from .model import ModelError, resolve_model
from .resonance import PHASE_LAG, TANGENT, ResonanceProblem, complexity_ratios
from .solver import NewtonSettings, verify_jacobian
from .studies import random_states

STUDIES = ("frf", "trace-phase-lag", "trace-tangent", "solutions-at", "branch-probe",
           "verify-jacobian", "complexity", "frf-batch")
THREADS_ENV = "RESONANCE_TRACER_THREADS"
COLUMNS = ("point_index", "parameter", "omega", "amplitude", "phase", "residual_norm")

EXIT_OK, EXIT_USAGE, EXIT_NOT_FOUND, EXIT_SCHEMA, EXIT_STUDY = 0, 2, 3, 4, 5


class StudyFailure(RuntimeError):
    """A study ran but not every requested point converged."""


# --------------------------------------------------------------------------- output

def fmt_float(v) -> str:
    """17 significant digits: enough to round-trip any double."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _json_dumps(obj, indent: int = 0) -> str:
    """JSON text with every float written at 17 significant digits.

    Non-finite floats become ``null``. Output is deterministic for equal input.
    """
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if all(isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool)
               for x in seq):
            return "[" + ", ".join(_json_dumps(x) for x in seq) + "]"
        return "[\n" + ",\n".join(pad + _json_dumps(x, indent + 1) for x in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def state_labels(nh: int, ndof: int) -> list[str]:
    labels = [f"Q0_{k}" for k in range(1, ndof + 1)]
    for n in range(1, nh + 1):
        labels += [f"Q{n}c_{k}" for k in range(1, ndof + 1)]
        labels += [f"Q{n}s_{k}" for k in range(1, ndof + 1)]
    return labels


def _rows(branch: Branch, full_state: bool):
    Q = branch.coefficient_matrix() if full_state and len(branch) else None
    for i, p in enumerate(branch.points):
        row = [i, p.parameter, p.omega, p.amplitude, p.phase, p.residual_norm]
        if Q is not None:
            row += list(Q[i])
        yield row


def render_branch(branch: Branch, fmt: str = "csv", full_state: bool = False) -> str:
    """Text of :func:`write_branch`."""
    d = branch.descriptor
    labels = state_labels(d["nh"], d["ndof"]) if full_state else []
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(COLUMNS) + labels)
        for row in _rows(branch, full_state):
            w.writerow([str(row[0])] + [fmt_float(v) for v in row[1:]])
        return buf.getvalue()
    if fmt == "json":
        points = []
        for row in _rows(branch, full_state):
            rec = dict(zip(COLUMNS, row))
            if full_state:
                rec["state"] = [float(v) for v in row[len(COLUMNS):]]
            points.append(rec)
        doc = {"version": __version__, "descriptor": d, "status": branch.status,
               "message": branch.message, "failure_index": branch.failure_index,
               "columns": list(COLUMNS), "state_labels": labels, "points": points}
        return _json_dumps(doc) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def write_branch(branch: Branch, fmt: str = "csv", path=None, full_state: bool = False) -> str:
    """Write ``branch`` as CSV or JSON to ``path`` (stdout for None or ``-``)."""
    if not len(branch):
        raise ValueError("refusing to write an empty branch")
    text = render_branch(branch, fmt, full_state)
    _emit(text, path)
    return text


def read_branch_json(path) -> dict:
    """Inverse of the JSON writer (``null`` phases come back as NaN)."""
    with open(path) as fh:
        doc = json.load(fh)
    for p in doc["points"]:
        for key in COLUMNS[1:]:
            if p[key] is None:
                p[key] = float("nan")
    return doc


def _emit(text: str, path) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _summary(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return _json_dumps(doc) + "\n"
    return "\n".join(f"{k}={_scalar(v)}" for k, v in doc.items()) + "\n"


def _scalar(v) -> str:
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_scalar(x) for x in v)
    return str(v)


# --------------------------------------------------------------------------- parsing

def parse_window(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like a:b, got {text!r}") from None
    if not b >= a:
        raise argparse.ArgumentTypeError(f"window {text!r} is empty (need a <= b)")
    return a, b


def parse_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="resonance-tracer",
        description="Harmonic balance forced responses and resonance-curve tracing.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("study", choices=STUDIES, help="what to compute")
    ap.add_argument("--model", help="model JSON file, or a bundled name "
                    "(twodof_m1, twodof_m2, linear_sdof); not needed for 'complexity'")
    ap.add_argument("--nh", type=_positive_int, default=3, help="harmonic order")
    ap.add_argument("--nt", type=int, default=None,
                    help="AFT samples per period (default: smallest alias-free power of two)")
    ap.add_argument("--coord", type=_positive_int, default=1,
                    help="monitored coordinate k (1-based)")
    ap.add_argument("--window", type=parse_window, default=None,
                    help="parameter window a:b; omega for frf/frf-batch (default 0.5:2.5), "
                    "lambda for the tracing studies and verify-jacobian (default 0:2, or 0:5 "
                    "for solutions-at/branch-probe)")
    ap.add_argument("--omega-window", type=parse_window, default=(0.5, 2.5),
                    help="omega window of the forced responses in branch-probe and of the "
                    "random states in verify-jacobian")
    ap.add_argument("--step", type=float, default=1e-3,
                    help="sequential parameter step, or initial (scaled) arclength step")
    ap.add_argument("--min-step", type=float, default=1e-7, help="arclength step floor")
    ap.add_argument("--max-step", type=float, default=5e-2, help="arclength step ceiling")
    ap.add_argument("--max-points", type=_positive_int, default=20000,
                    help="arclength point budget per branch")
    ap.add_argument("--mode", choices=(SEQUENTIAL, ARCLENGTH), default=None,
                    help="continuation mode for trace studies (default sequential)")
    ap.add_argument("--method", choices=("phase-lag", "tangent"), default="phase-lag",
                    help="resonance condition for solutions-at/branch-probe")
    ap.add_argument("--form", choices=("normalized", "tangent"), default="normalized",
                    help="algebraic form of the phase-lag condition")
    ap.add_argument("--mode-index", type=_positive_int, default=1,
                    help="linear mode whose resonance is traced")
    ap.add_argument("--lambda", dest="lam", type=float, default=0.0,
                    help="parameter value for frf, solutions-at and branch-probe")
    ap.add_argument("--lambdas", type=parse_list, default=None,
                    help="comma-separated lambda values for frf-batch")
    ap.add_argument("--ndof", type=_positive_int, default=None,
                    help="coordinate count for 'complexity' (default: the model's, else 1)")
    ap.add_argument("--epsilon", type=float, default=1e-8, help="Newton residual tolerance")
    ap.add_argument("--max-iter", type=_positive_int, default=50, help="Newton iteration cap")
    ap.add_argument("--jacobian", choices=("analytical", "finite-difference"),
                    default="analytical", help="Jacobian source for the phase-lag method")
    ap.add_argument("--samples", type=_positive_int, default=100,
                    help="random states for verify-jacobian")
    ap.add_argument("--seed", type=int, default=0, help="RNG seed for verify-jacobian")
    ap.add_argument("--state-scale", type=float, default=1.0,
                    help="standard deviation of the random coefficients in verify-jacobian")
    ap.add_argument("--tolerance", type=float, default=1e-6,
                    help="pass threshold for verify-jacobian")
    ap.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")
    ap.add_argument("--full-state", action="store_true",
                    help="append every harmonic coefficient to each output row")
    ap.add_argument("-o", "--output", default="-",
                    help="output file ('-' for stdout; a directory for frf-batch)")
    return ap


# --------------------------------------------------------------------------- studies

def _newton(args) -> NewtonSettings:
    return NewtonSettings(epsilon=args.epsilon, max_iterations=args.max_iter,
                          jacobian_mode=args.jacobian)


def _arclength_settings(args, window) -> ContinuationSettings:
    initial = min(max(args.step, args.min_step), args.max_step)
    return ContinuationSettings(mode=ARCLENGTH, initial_step=initial, min_step=args.min_step,
                                max_step=args.max_step, window=tuple(window),
                                max_points=args.max_points,
                                corrector=NewtonSettings(epsilon=args.epsilon, max_iterations=12))


def _check_coord(model, k):
    if not 1 <= k <= model.ndof:
        raise ModelError(f"--coord {k} outside [1, {model.ndof}]")


def _resonance_problem(args, model, method):
    if method == PHASE_LAG:
        return ResonanceProblem.phase_lag(model, args.nh, args.coord, args.mode_index,
                                          args.form, args.nt)
    return ResonanceProblem.tangent(model, args.nh, args.coord, args.nt, args.mode_index)


def _finish(branch: Branch, args, what: str) -> Branch:
    if not len(branch):
        raise StudyFailure(f"{what}: no point converged ({branch.message})")
    write_branch(branch, args.format, args.output, args.full_state)
    if not branch.ok:
        raise StudyFailure(f"{what}: {branch.status} after {len(branch)} points: {branch.message}")
    return branch


def run_frf(args, model):
    window = args.window or (0.5, 2.5)
    if window[0] <= 0:
        raise ValueError("omega window must be positive")
    grid = AftGrid(args.nh, args.nt)
    branch = frequency_response(model, args.lam, window, args.coord,
                                _arclength_settings(args, window), args.nh, grid)
    return _finish(branch, args, "frf")


def run_trace(args, model, method):
    window = args.window or (0.0, 2.0)
    problem = _resonance_problem(args, model, method)
    mode = args.mode or SEQUENTIAL
    branch = resonance_curve(problem, window, args.step, mode,
                             _arclength_settings(args, window), newton=_newton(args))
    return _finish(branch, args, f"trace {method}")


def _curve_and_solutions(args, model):
    window = args.window or (0.0, 5.0)
    if not window[0] <= args.lam <= window[1]:
        raise ValueError(f"--lambda {args.lam} outside the window {window}")
    method = PHASE_LAG if args.method == "phase-lag" else TANGENT
    problem = _resonance_problem(args, model, method)
    curve = resonance_curve(problem, window, max(args.step, 1e-2), ARCLENGTH,
                            _arclength_settings(args, window))
    if not curve.ok:
        raise StudyFailure(f"resonance curve: {curve.status}: {curve.message}")
    sols = solutions_at_parameter(curve, args.lam, problem, _newton(args))
    sols.sort(key=lambda s: (s.omega_res, s.amplitude))
    return problem, curve, sols


def _points_branch(problem, sols, lam) -> Branch:
    pts = [BranchPoint(np.append(s.q, s.omega_res), lam, s.omega_res, s.amplitude, s.phase,
                       s.residual_norm, 0.0, s.iterations) for s in sols]
    d = dict(problem.descriptor())
    d["study"] = "solutions-at"
    return Branch(pts, d)


def run_solutions_at(args, model):
    problem, curve, sols = _curve_and_solutions(args, model)
    if not sols:
        raise StudyFailure(f"no resonance point at lambda={args.lam}")
    branch = _points_branch(problem, sols, args.lam)
    branch.descriptor["turning_points"] = [tp.parameter for tp in
                                           find_turning_points(curve, problem)]
    return _finish(branch, args, "solutions-at")


def run_branch_probe(args, model):
    problem, _, sols = _curve_and_solutions(args, model)
    if not sols:
        raise StudyFailure(f"no resonance point at lambda={args.lam}")
    window = args.omega_window
    settings = _arclength_settings(args, window)
    frfs = [frequency_response(model, args.lam, window, args.coord, settings, args.nh,
                               problem.grid, seed=(s.q, s.omega_res)) for s in sols]
    # group seeds whose forced responses touch
    group = list(range(len(frfs)))
    for i in range(len(frfs)):
        for j in range(i):
            if branch_connectivity(frfs[i], frfs[j]) == "connected":
                group[i] = group[j]
                break
    ids = {g: n for n, g in enumerate(dict.fromkeys(group))}
    rows = []
    for i, (s, f) in enumerate(zip(sols, frfs)):
        rows.append({"seed_index": i, "lambda": args.lam, "omega_res": s.omega_res,
                     "amplitude": s.amplitude, "branch_id": ids[group[i]],
                     "branch_status": f.status, "branch_points": len(f),
                     "omega_min": float(f.omegas.min()), "omega_max": float(f.omegas.max()),
                     "maxima": len(detect_local_maxima(f))})
    if args.format == "json":
        text = _json_dumps({"version": __version__, "descriptor": problem.descriptor(),
                            "omega_window": list(window), "seeds": rows,
                            "branches": len(ids)}) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(rows[0]))
        for r in rows:
            w.writerow([fmt_float(v) if isinstance(v, float) else v for v in r.values()])
        text = buf.getvalue()
    _emit(text, args.output)
    bad = [f for f in frfs if not f.ok]
    if bad:
        raise StudyFailure(f"{len(bad)} forced-response branch(es) aborted: {bad[0].message}")


def run_verify_jacobian(args, model):
    rng = np.random.default_rng(args.seed)
    lam_window = args.window or (0.0, 2.0)
    grid = AftGrid(args.nh, args.nt)
    problem = _resonance_problem(args, model, PHASE_LAG)
    worst = {"dR_dQ": 0.0, "dR_domega": 0.0, "phase_lag_extended": 0.0}
    for Q, w, lam in random_states(model, args.nh, args.samples, rng, lam_window,
                                   args.omega_window, args.state_scale):
        worst["dR_dQ"] = max(worst["dR_dQ"], verify_jacobian(
            lambda q: hbm_residual(q, w, lam, model, grid),
            lambda q: hbm_jacobians(q, w, lam, model, grid)[0], Q))
        worst["dR_domega"] = max(worst["dR_domega"], verify_jacobian(
            lambda v: hbm_residual(Q, v[0], lam, model, grid),
            lambda v: hbm_jacobians(Q, v[0], lam, model, grid)[1][:, None], [w]))
        worst["phase_lag_extended"] = max(worst["phase_lag_extended"], verify_jacobian(
            lambda x: problem.residual(x, lam), lambda x: problem.jacobian(x, lam),
            np.append(Q, w)))
    doc = {"samples": args.samples, "seed": args.seed, "lambda_window": list(lam_window),
           "omega_window": list(args.omega_window), "state_scale": args.state_scale,
           **{f"max_{k}": v for k, v in worst.items()}, "tolerance": args.tolerance,
           "passed": all(v < args.tolerance for v in worst.values())}
    _emit(_summary(doc, args.format), args.output)
    if not doc["passed"]:
        raise StudyFailure(f"Jacobian discrepancy above {args.tolerance:g}")


def run_complexity(args, model):
    ndof = args.ndof or (model.ndof if model is not None else 1)
    z_a, z_m = complexity_ratios(args.nh, ndof)
    doc = {"nh": args.nh, "ndof": ndof, "Z_a": float(z_a), "Z_m": float(z_m),
           "Z_a_exact": str(z_a), "Z_m_exact": str(z_m)}
    _emit(_summary(doc, args.format), args.output)


def batch_workers(n_jobs: int) -> int:
    """Worker count: ``RESONANCE_TRACER_THREADS`` if set, else the CPU count."""
    env = os.environ.get(THREADS_ENV)
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        if cap < 1:
            raise ValueError(f"{THREADS_ENV} must be >= 1")
    return max(1, min(cap, n_jobs))


def run_frf_batch(args, model):
    if not args.lambdas:
        raise ValueError("frf-batch needs --lambdas")
    if args.output == "-":
        raise ValueError("frf-batch writes one file per lambda; pass a directory with -o")
    window = args.window or (0.5, 2.5)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    settings = _arclength_settings(args, window)

    def job(lam):
        return frequency_response(model, lam, window, args.coord, settings, args.nh,
                                  AftGrid(args.nh, args.nt))

    with ThreadPoolExecutor(max_workers=batch_workers(len(args.lambdas))) as pool:
        branches = list(pool.map(job, args.lambdas))
    failed = []
    for lam, br in zip(args.lambdas, branches):
        name = f"frf_lambda={float(lam)!r}.{args.format}"
        if len(br):
            write_branch(br, args.format, outdir / name, args.full_state)
        if not br.ok:
            failed.append(f"lambda={fmt_float(lam)} ({br.status})")
    if failed:
        raise StudyFailure("not converged: " + ", ".join(failed))


RUNNERS = {
    "frf": run_frf,
    "trace-phase-lag": lambda a, m: run_trace(a, m, PHASE_LAG),
    "trace-tangent": lambda a, m: run_trace(a, m, TANGENT),
    "solutions-at": run_solutions_at,
    "branch-probe": run_branch_probe,
    "verify-jacobian": run_verify_jacobian,
    "complexity": run_complexity,
    "frf-batch": run_frf_batch,
}


def _fail(kind: str, study: str, exc, code: int) -> int:
    msg = " ".join(str(exc).split())
    sys.stderr.write(f"resonance-tracer: error={kind} study={study} message={json.dumps(msg)}\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    study = args.study
    try:
        if args.model is None:
            if study != "complexity":
                raise ValueError("--model is required for this study")
            model = None
        else:
            model = resolve_model(args.model)
            _check_coord(model, args.coord)
        RUNNERS[study](args, model)
    except FileNotFoundError as exc:
        return _fail("file-not-found", study, exc, EXIT_NOT_FOUND)
    except ModelError as exc:
        return _fail("schema-violation", study, exc, EXIT_SCHEMA)
    except StudyFailure as exc:
        return _fail("study-failure", study, exc, EXIT_STUDY)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail("invalid-argument", study, exc, EXIT_USAGE)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
