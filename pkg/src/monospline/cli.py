"""Command-line entry point.

Reads the generator (transfer function, state-space file, or the built-in
example fixture) and the data CSV, runs the proposed certified-grid pipeline
or the conventional sample-points-only baseline, and writes the curve CSV,
the JSON run summary (verification report included), and optional figures.

Exit codes: 0 solved and monotone everywhere, 1 input error, 2 solver
reported infeasible, 3 solved but the dense verification found a negative
derivative.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import fixture
from .errors import MonosplineError
from .problem import DataSet
from .spline import fit_conventional, fit_monotone, sample_curve
from .system import StateSpace, tf_to_ss

SUMMARY_SCHEMA = 1

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_VIOLATION = 3


class InputError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="monospline",
        description="Monotone smoothing splines generated by a SISO LTI system.",
    )
    src = p.add_mutually_exclusive_group()
    src.add_argument(
        "--system-tf",
        metavar="NUM/DEN",
        help="transfer function as comma-separated coefficient lists in "
        "descending powers of s, numerator and denominator separated by "
        "a slash, e.g. 1/1,0,1,0,0 for 1/(s^2(s^2+1))",
    )
    src.add_argument(
        "--system-ss", metavar="FILE",
        help="JSON file with fields a (n x n), b (n), c (n)",
    )
    src.add_argument(
        "--fixture", choices=[fixture.FIXTURE_NAME],
        help="use the built-in example (system, data and settings)",
    )
    p.add_argument("--data", metavar="FILE",
                   help="CSV with header t,alpha[,w]; last time defines the horizon")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="smoothing weight (> 0)")
    p.add_argument("--weight", type=float, default=1.0,
                   help="default per-point weight when the CSV has no w column")
    p.add_argument("--epsilon", type=float, default=None,
                   help="constraint margin (> 0); default scales with the data slope")
    p.add_argument("--r", default=None,
                   help="parameter box bound, a number or 'auto' (default auto)")
    p.add_argument("--mode", choices=["proposed", "conventional"], default="proposed")
    p.add_argument("--eq", action="append", default=[], metavar="KIND:T:TARGET",
                   help="equality constraint, kind in {value,derivative}; repeatable")
    p.add_argument("--probe-points", type=int, default=1000,
                   help="probe grid size for the Lipschitz estimate")
    p.add_argument("--grid-cap", type=int, default=10**7,
                   help="largest allowed number of grid intervals")
    p.add_argument("--resolution", type=int, default=1000,
                   help="number of curve samples to write")
    p.add_argument("--out-curve", metavar="FILE", default=None)
    p.add_argument("--out-summary", metavar="FILE", default=None)
    p.add_argument("--plots", metavar="DIR", default=None,
                   help="also render fit/derivative/input figures into DIR")
    return p


def parse_tf(text: str):
    if "/" not in text:
        raise InputError(
            "--system-tf must look like NUM/DEN, e.g. 1/1,0,1,0,0"
        )
    num_s, den_s = text.split("/", 1)
    try:
        num = [float(x) for x in num_s.split(",") if x.strip() != ""]
        den = [float(x) for x in den_s.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise InputError(f"--system-tf has a non-numeric coefficient: {exc}") from None
    return num, den


def load_data_csv(path: str, default_weight: float, lam: float) -> DataSet:
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise InputError(f"cannot read data file {path}: {exc.strerror}") from None
    if not lines:
        raise InputError(f"data file {path} is empty")
    header = [h.strip().lower() for h in lines[0].split(",")]
    if header[:2] != ["t", "alpha"]:
        raise InputError(
            f"data file {path}: header must be t,alpha[,w], got {lines[0]!r}"
        )
    has_w = len(header) > 2 and header[2] == "w"
    rows = []
    for k, ln in enumerate(lines[1:], start=2):
        parts = [x.strip() for x in ln.split(",")]
        try:
            rows.append([float(x) for x in parts])
        except ValueError:
            raise InputError(f"data file {path}, line {k}: non-numeric value") from None
    if not rows:
        raise InputError(f"data file {path} contains a header but no rows")
    arr = np.array(rows, dtype=float)
    t, alpha = arr[:, 0], arr[:, 1]
    w = arr[:, 2] if has_w and arr.shape[1] > 2 else np.full(t.size, default_weight)
    return DataSet(t, alpha, w, lam)


def load_system_ss(path: str, horizon: float) -> StateSpace:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read system file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"system file {path} is not valid JSON: {exc}") from None
    for key in ("a", "b", "c"):
        if key not in doc:
            raise InputError(f"system file {path}: missing field '{key}'")
    return StateSpace(np.array(doc["a"], float), np.array(doc["b"], float),
                      np.array(doc["c"], float), horizon)


def parse_equalities(specs):
    out = []
    for s in specs:
        parts = s.split(":")
        if len(parts) != 3 or parts[0] not in ("value", "derivative"):
            raise InputError(
                f"--eq must be KIND:T:TARGET with kind value|derivative, got {s!r}"
            )
        try:
            out.append((parts[0], float(parts[1]), float(parts[2])))
        except ValueError:
            raise InputError(f"--eq {s!r}: time and target must be numbers") from None
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_curve_csv(path: str, curve: np.ndarray):
    with open(path, "w") as fh:
        fh.write("t,y,ydot,u\n")
        for row in curve:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def build_summary(sol, mode: str) -> dict:
    qs = sol.solver
    summary = {
        "schema": SUMMARY_SCHEMA,
        "mode": mode,
        "m": int(sol.table.m),
        "n": int(sol.sys.n),
        "lambda": sol.data.lam,
        "solver_status": qs.status,
        "solver_iterations": qs.iterations,
        "kkt_residual_max": qs.kkt_residuals.max(),
        "objective_f": sol.objective_f,
        "objective_j": sol.objective_j,
        "theta": [float(v) for v in sol.theta],
    }
    if sol.plan is not None:
        summary.update({
            "epsilon": sol.plan.epsilon,
            "r": sol.plan.r,
            "mu": sol.plan.mu,
            "grid_intervals": sol.plan.intervals,
        })
    if sol.mu_estimate is not None:
        summary["mu_degenerate"] = sol.mu_estimate.degenerate
    if sol.verification is not None:
        v = sol.verification
        summary["verification"] = {
            "min_ydot": v.min_ydot,
            "argmin_t": v.argmin_t,
            "grid_resolution": v.grid_resolution,
            "feasible_everywhere": v.feasible_everywhere,
            "grid_margin_ok": v.grid_margin_ok,
        }
    return summary


def run(args) -> int:
    t_start = time.monotonic()
    equalities = parse_equalities(args.eq)

    if args.fixture:
        sys_model = fixture.fixture_system()
        data = fixture.fixture_dataset()
        if args.lam is not None:
            data = DataSet(data.times, data.values, data.weights, args.lam)
        settings = fixture.fixture_settings()
        epsilon = args.epsilon if args.epsilon is not None else settings["epsilon"]
        r = _parse_r(args.r) if args.r is not None else settings["r"]
    else:
        if not args.data:
            raise InputError("--data FILE is required unless --fixture is used")
        lam = args.lam if args.lam is not None else 0.1
        data = load_data_csv(args.data, args.weight, lam)
        horizon = data.horizon
        if args.system_tf:
            num, den = parse_tf(args.system_tf)
            sys_model = tf_to_ss(num, den, horizon)
        elif args.system_ss:
            sys_model = load_system_ss(args.system_ss, horizon)
        else:
            raise InputError("one of --system-tf, --system-ss or --fixture is required")
        epsilon = args.epsilon
        r = _parse_r(args.r)

    if args.mode == "proposed":
        sol = fit_monotone(
            sys_model, data, epsilon=epsilon, r=r,
            probe_points=args.probe_points, grid_cap=args.grid_cap,
            equalities=equalities,
        )
    else:
        sol = fit_conventional(sys_model, data, equalities=equalities)

    summary = build_summary(sol, args.mode)
    if sol.status == "optimal":
        curve = sample_curve(sol, args.resolution)
        if args.out_curve:
            write_curve_csv(args.out_curve, curve)
        if args.plots:
            from .report import render_figures

            for p in render_figures(sol, curve, args.plots):
                print(f"wrote {p}", file=sys.stderr)
    if args.out_summary:
        with open(args.out_summary, "w") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")

    elapsed = time.monotonic() - t_start
    print(f"status={sol.status} elapsed={elapsed:.2f}s", file=sys.stderr)

    if sol.status == "infeasible":
        print(
            "the discretized program is infeasible; try a smaller --epsilon "
            "or looser equality constraints",
            file=sys.stderr,
        )
        return EXIT_INFEASIBLE
    if sol.status != "optimal":
        print(f"solver did not converge (status {sol.status})", file=sys.stderr)
        return EXIT_INFEASIBLE
    v = sol.verification
    if v is not None and not v.feasible_everywhere:
        print(
            f"monotonicity violated: min dy/dt = {v.min_ydot:.6g} at t = {v.argmin_t:.6g}",
            file=sys.stderr,
        )
        return EXIT_VIOLATION
    return EXIT_OK


def _parse_r(value):
    if value is None or value == "auto":
        return None
    try:
        r = float(value)
    except ValueError:
        raise InputError(f"--r must be a number or 'auto', got {value!r}") from None
    if r <= 0:
        raise InputError(f"--r must be positive, got {r}")
    return r


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (InputError, MonosplineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
