"""Command line front end: ``abss solve|verify|interval PROBLEM``.

Exit codes: 0 success, 1 usage/IO/validation error, 2 incompatible (or
numerically degenerate) system, 3 Monte Carlo gate failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import core, files, montecarlo, stochastic
from .core import Strategy
from .gaussian import DistSummary

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INCOMPATIBLE = 2
EXIT_GATE = 3


class UsageError(Exception):
    pass


def _strategy(pf, args):
    return Strategy.named(args.strategy or pf.strategy)


def _emit(report, args):
    if args.out == "-":
        sys.stdout.write(json.dumps(report, indent=1) + "\n")
    elif args.out:
        files.write_report(report, args.out)


def _fmt(x):
    return np.array2string(np.asarray(x), precision=6, suppress_small=True)


def cmd_solve(pf: files.ProblemFile, args) -> int:
    strategy = _strategy(pf, args)
    tol = pf.tol()
    if pf.is_gaussian:
        problem = pf.stochastic()
        state = stochastic.run_s(problem, pf.x1, pf.H1, strategy, tol)
        report = files.stochastic_report(pf, state, args.trace)
    else:
        problem = pf.deterministic()
        state = core.run(problem, pf.x1, pf.H1, strategy, tol)
        report = files.deterministic_report(pf, state, args.trace)
    _emit(report, args)

    if state.verdict == core.INCOMPATIBLE:
        print(f"incompatible: equation at row {state.incompatible_row} contradicts earlier rows",
              file=sys.stderr)
        return EXIT_INCOMPATIBLE
    print(f"verdict: solved  rank: {state.rank}  skipped rows: {sorted(state.skipped)}")
    if args.trace:
        for rec in report["steps"]:
            print(_trace_line(rec))
    if pf.is_gaussian:
        print("mean:", _fmt(report["solution"]["mean"]))
        print("cov:\n" + _fmt(report["solution"]["cov"]))
    else:
        print("solution:", _fmt(report["solution"]))
    return EXIT_OK


def _trace_line(rec):
    line = f"row {rec['row']}: {rec['action']}"
    if rec["action"] != core.ACCEPTED:
        return line
    alpha = rec["alpha"]
    if isinstance(alpha, dict):
        return line + f"  a.p={rec['a_dot_p']:.6g}  alpha ~ N({alpha['mean']:.6g}, {alpha['variance']:.6g})"
    return line + f"  a.p={rec['a_dot_p']:.6g}  alpha={alpha:.6g}"


def cmd_verify(pf: files.ProblemFile, args) -> int:
    if not pf.is_gaussian:
        raise UsageError("verify needs a gaussian right-hand side")
    samples = args.samples if args.samples is not None else (pf.samples or 100_000)
    seed = args.seed if args.seed is not None else (pf.seed or 0)
    cfg = montecarlo.McConfig(samples, seed, args.parallel_chunks)
    strategy = _strategy(pf, args)
    problem = pf.stochastic()
    tol = pf.tol()
    analytic = None
    if args.tamper_mean:
        sol = stochastic.solve_s(problem, pf.x1, pf.H1, strategy, tol)
        analytic = DistSummary(sol.summary.mean + args.tamper_mean, sol.summary.cov)
    rep = montecarlo.run_mc(problem, pf.x1, pf.H1, strategy, cfg, tol, analytic=analytic)
    state = stochastic.run_s(problem, pf.x1, pf.H1, strategy, tol)
    report = files.stochastic_report(pf, state, args.trace)
    report["monte_carlo"] = files.mc_to_dict(rep)
    _emit(report, args)

    print(f"samples: {rep.samples_used}  seed: {seed}")
    print(f"max mean z: {rep.max_mean_z:.3f} (gate {montecarlo.MEAN_GATE})"
          f"  -> {'pass' if rep.mean_pass else 'FAIL'}")
    print(f"max cov dev: {rep.max_cov_dev:.3f} (gate {montecarlo.COV_GATE})"
          f"  -> {'pass' if rep.cov_pass else 'FAIL'}")
    for a in rep.per_alpha:
        print(f"alpha row {a.row}: z={a.mean_z:.3f} var dev={a.var_dev:.3f}")
    return EXIT_OK if rep.passed else EXIT_GATE


def cmd_interval(pf: files.ProblemFile, args) -> int:
    if not pf.is_gaussian:
        raise UsageError("interval needs a gaussian right-hand side")
    if args.step is None:
        raise UsageError("interval needs --step")
    if args.k not in stochastic.INTERVAL_PROBABILITY:
        raise UsageError(f"--k must be 1, 2 or 3, got {args.k}")
    problem = pf.stochastic()
    state = stochastic.run_s(problem, pf.x1, pf.H1, _strategy(pf, args), pf.tol())
    if state.verdict == core.INCOMPATIBLE and args.step >= state.incompatible_row:
        print(f"incompatible: equation at row {state.incompatible_row} contradicts earlier rows",
              file=sys.stderr)
        return EXIT_INCOMPATIBLE
    summ = stochastic.alpha_summary(state, args.step)
    iv = stochastic.alpha_interval(summ, args.k)
    print(f"[{iv.lo!r}, {iv.hi!r}] {iv.prob}")
    _emit({"schema_version": files.SCHEMA_VERSION, "step": args.step, "k": args.k,
           "lo": iv.lo, "hi": iv.hi, "prob": iv.prob,
           "alpha": files.summary_to_dict(summ)}, args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("problem", help="problem file (JSON)")
    common.add_argument("--out", help="write the JSON report here ('-' for stdout)")
    common.add_argument("--trace", action="store_true", help="include per-step records")
    common.add_argument("--strategy", choices=["huang", "unit"], help="override the file's strategy")

    sub.add_parser("solve", parents=[common], help="solve deterministically or in distribution")

    p = sub.add_parser("verify", parents=[common], help="Monte Carlo check of the closed form")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--parallel-chunks", type=int, default=1)
    p.add_argument("--tamper-mean", type=float, default=0.0, help=argparse.SUPPRESS)

    p = sub.add_parser("interval", parents=[common], help="steplength interval at k std devs")
    p.add_argument("--step", type=int)
    p.add_argument("--k", type=int, default=3)
    return parser


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "interval": cmd_interval}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        pf = files.parse_problem(args.problem)
        return COMMANDS[args.command](pf, args)
    except (core.IllConditionedStep, core.IncompatibleSystem) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except (UsageError, OSError, ValueError, LookupError, core.AbsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
