"""Command-line entry point.

Verbs::

    gpecm evaluate  --scenario S --trajectory trajectory.csv --schedule schedule.csv [--out DIR]
    gpecm optimize  --scenario S --out DIR [--scheme gpecm|kappa1|heuristic]
    gpecm benchmark --scenario S --out DIR
    gpecm oracle    [--users K] [--slots N] [--instances M] [--seed SEED]

Exit status is 0 on success, 2 for invalid input and 3 when a solver fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import conic
from .driver import (
    SCHEMES,
    AlternatingOptError,
    ScenarioError,
    emit_reports,
    evaluate_run,
    load_scenario,
    reference_scenario_path,
    read_schedule_csv,
    read_trajectory_csv,
    run_benchmarks,
    run_scheme,
    summary_dict,
)
from .kinematics import InfeasibleTourError, TrajectoryError
from .radio import ScheduleError
from .scheduling import SchedulingError, SchedulingInstance, brute_force_schedule, round_schedule, solve_lp_relaxation
from .trajectory import TrajectoryOptError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3

_SOLVER_ERRORS = (TrajectoryOptError, AlternatingOptError, SchedulingError, conic.ConicSolveError)
_INPUT_ERRORS = (ScenarioError, TrajectoryError, ScheduleError, InfeasibleTourError, conic.ConicStructureError)


def _tolerances(args):
    out = {}
    for name in ("epsilon", "tol_sca", "tol_dink"):
        val = getattr(args, name, None)
        if val is not None:
            out[name] = math.inf if val == "inf" else float(val)
    if getattr(args, "backend", None):
        out["backend"] = args.backend
    return out


def _scenario(args):
    return load_scenario(args.scenario or reference_scenario_path(), **_tolerances(args))


def _cmd_evaluate(args):
    s = _scenario(args)
    traj = read_trajectory_csv(args.trajectory, s.slot_length)
    sched = read_schedule_csv(args.schedule, s.num_users, traj.num_slots)
    res = evaluate_run(s, traj, sched)
    if args.out:
        emit_reports([res], args.out)
    print(json.dumps(summary_dict(res), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_optimize(args):
    s = _scenario(args)
    res = run_scheme(s, args.scheme or s.scheme)
    emit_reports([res], args.out)
    print(f"{res.scheme}: EE {res.ee:.6g} (objective), {res.ee_bits_per_joule:.6g} bits/J, {res.iterations} AO rounds")
    return EXIT_OK


def _cmd_benchmark(args):
    s = _scenario(args)
    results = run_benchmarks(s)
    emit_reports(results, args.out)
    for res in results:
        if res.ok:
            print(f"{res.scheme:9s} EE {res.ee:.6g}  raw {res.ee_raw:.6g}  {res.ee_bits_per_joule:.6g} bits/J")
        else:
            print(f"{res.scheme:9s} failed: {res.error}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_SOLVER


def _cmd_oracle(args):
    """LP relaxation vs exhaustive binary search on random small instances."""
    rng = np.random.default_rng(args.seed)
    bad = 0
    for i in range(args.instances):
        K = int(rng.integers(1, args.users + 1))
        N = int(rng.integers(1, args.slots + 1))
        inst = SchedulingInstance(rng.uniform(0.0, 2.0, size=(K, N)))
        relaxed, lp = solve_lp_relaxation(inst)
        _, brute = brute_force_schedule(inst)
        rounded = round_schedule(relaxed, inst)
        ok = lp >= brute - 1e-6 and np.all(rounded.alpha.sum(axis=0) <= 1)
        bad += not ok
        if args.verbose or not ok:
            print(f"instance {i}: K={K} N={N} lp={lp:.9g} brute={brute:.9g} {'ok' if ok else 'FAIL'}")
    print(f"{args.instances - bad}/{args.instances} instances agree")
    return EXIT_OK if bad == 0 else EXIT_SOLVER


def build_parser():
    p = argparse.ArgumentParser(prog="gpecm", description="UAV energy-efficiency optimization")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_flags(sp):
        sp.add_argument("--scenario", help="scenario .cfg (defaults to the shipped four-user scenario)")
        sp.add_argument("--seed", type=int, default=0, help="accepted for reproducibility; the pipeline is deterministic")
        sp.add_argument("--tol-epsilon", dest="epsilon", help="outer AO tolerance ('inf' for one round)")
        sp.add_argument("--tol-sca", dest="tol_sca", help="relative SCA improvement tolerance")
        sp.add_argument("--tol-dink", dest="tol_dink", help="Dinkelbach tolerance")
        sp.add_argument("--backend", choices=("auto", "reference", "clarabel"))

    sp = sub.add_parser("evaluate", help="score a trajectory and schedule")
    scenario_flags(sp)
    sp.add_argument("--trajectory", required=True)
    sp.add_argument("--schedule", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_evaluate)

    sp = sub.add_parser("optimize", help="run one scheme")
    scenario_flags(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--scheme", choices=SCHEMES)
    sp.set_defaults(func=_cmd_optimize)

    sp = sub.add_parser("benchmark", help="run all schemes")
    scenario_flags(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_benchmark)

    sp = sub.add_parser("oracle", help="check the scheduling LP against brute force")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--users", type=int, default=3)
    sp.add_argument("--slots", type=int, default=6)
    sp.add_argument("--instances", type=int, default=100)
    sp.set_defaults(func=_cmd_oracle)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _SOLVER_ERRORS as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except _INPUT_ERRORS as err:
        print(f"invalid input: {err}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as err:
        print(f"invalid input: {err}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
