"""Command-line entry point: gen, solve, eval, anytime and sweep.

Exit codes: 0 success, 1 usage, 2 model error, 3 solver wall-clock cap hit.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from typing import Optional, Sequence

from .domains import make_domain
from .evaluation import DEFAULT_HORIZON, SWEEP_COLUMNS, anytime_curve, evaluate_adr, sweep
from .model import ModelError, transform_to_goal_pomdp
from .pomdp_format import load_pomdp, write_pomdp
from .solver import B3RTDP, Policy, SolverParams

EXIT_OK, EXIT_USAGE, EXIT_MODEL, EXIT_TIMEOUT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _model_args(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--domain", help="built-in domain: tiger, tag or rocksample_N_K")
    g.add_argument("--model", help="path to a .pomdp file")


def _solver_args(p, multi=False):
    if multi:
        p.add_argument("-D", type=int, nargs="+", default=[10, 15, 20])
        p.add_argument("--alpha", type=float, nargs="+", default=[0.65, 0.95])
        p.add_argument("--seed", type=int, nargs="+", default=[0])
    else:
        p.add_argument("-D", type=int, default=10)
        p.add_argument("--alpha", type=float, default=0.95)
        p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--beta", type=float, default=0.001)
    p.add_argument("--tau", type=float, default=10.0)
    p.add_argument("--max-depth", type=int, default=200)
    p.add_argument("--time-limit", type=float, default=None, help="solver wall-clock cap (s)")


def _eval_args(p):
    p.add_argument("--runs", type=int, default=200)
    p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)


def _out_args(p):
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="b3rtdp", description="Bounded belief-space RTDP for tabular POMDPs")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="write a built-in domain as a .pomdp file")
    p.add_argument("--domain", required=True)
    p.add_argument("--out", default="-")

    p = sub.add_parser("solve", help="solve a model and write the policy")
    _model_args(p)
    _solver_args(p)
    p.add_argument("--out", required=True, help="policy file")
    p.add_argument("--log", default=None, help="progress log (one JSON record per trial)")

    p = sub.add_parser("eval", help="estimate the ADR of a saved policy")
    _model_args(p)
    p.add_argument("--policy", required=True)
    p.add_argument("--seed", type=int, default=0)
    _eval_args(p)
    _out_args(p)

    p = sub.add_parser("anytime", help="ADR of policy snapshots during one solve")
    _model_args(p)
    _solver_args(p)
    p.add_argument("--checkpoints", type=float, nargs="+", required=True, help="seconds")
    _eval_args(p)
    _out_args(p)

    p = sub.add_parser("sweep", help="solve and evaluate a grid over D and alpha")
    _model_args(p)
    _solver_args(p, multi=True)
    _eval_args(p)
    _out_args(p)
    return ap


def _load_models(args):
    if args.model is not None:
        md = load_pomdp(args.model)
        name = args.model
    else:
        md = make_domain(args.domain)
        name = args.domain
    return name, md, transform_to_goal_pomdp(md)


def _params(args, **over) -> SolverParams:
    base = SolverParams(epsilon=args.epsilon, beta=args.beta, tau=args.tau,
                        max_depth=args.max_depth, time_limit=args.time_limit)
    return replace(base, **over)


def _open_out(path):
    return sys.stdout if path == "-" else open(path, "w", newline="")


def _emit(rows, columns, path, fmt):
    fh = _open_out(path)
    try:
        if fmt == "csv":
            w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
            w.writeheader()
            for r in rows:
                w.writerow(r)
        else:
            for r in rows:
                fh.write(json.dumps({k: r[k] for k in columns}) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def _check_runs(parser, args):
    if args.runs < 2:
        parser.error("--runs must be >= 2")


def _cmd_gen(args):
    md = make_domain(args.domain)
    fh = _open_out(args.out)
    try:
        write_pomdp(md, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def _cmd_solve(args):
    _, _, m = _load_models(args)
    params = _params(args, D=args.D, alpha=args.alpha, seed=args.seed)
    log_fh = open(args.log, "w") if args.log else None
    progress = (lambda rec: log_fh.write(json.dumps(rec) + "\n")) if log_fh else None
    try:
        solver = B3RTDP(m, params, progress=progress)
        stats = solver.run()
    finally:
        if log_fh:
            log_fh.close()
    with open(args.out, "w") as fh:
        solver.policy(freeze=False).dump(fh)
    print(json.dumps({"trials": stats.trials, "elapsed_ms": stats.elapsed * 1000.0,
                      "converged": stats.converged, "table_records": stats.table_records}),
          file=sys.stderr)
    return EXIT_TIMEOUT if stats.timed_out else EXIT_OK


REPORT_COLUMNS = ("mean", "half_width_95", "runs", "wall_clock_ms", "heuristic_only")


def _cmd_eval(args):
    _, md, m = _load_models(args)
    with open(args.policy) as fh:
        pol = Policy.load(fh, m)
    rep = evaluate_adr(pol, md, m, args.runs, args.horizon, args.seed)
    _emit([rep.to_dict()], REPORT_COLUMNS, args.out, args.format)
    return EXIT_OK


def _cmd_anytime(args):
    _, md, m = _load_models(args)
    params = _params(args, D=args.D, alpha=args.alpha, seed=args.seed)
    curve = anytime_curve(md, m, params, args.checkpoints, args.runs, args.horizon, args.seed)
    rows = [dict(checkpoint_s=cp, solve_ms=el * 1000.0, **rep.to_dict()) for cp, el, rep in curve]
    _emit(rows, ("checkpoint_s", "solve_ms") + REPORT_COLUMNS, args.out, args.format)
    return EXIT_OK


def _cmd_sweep(args):
    name, md, m = _load_models(args)
    rows = sweep(name, md, m, args.D, args.alpha, args.seed, base=_params(args),
                 runs=args.runs, horizon=args.horizon)
    _emit(rows, SWEEP_COLUMNS, args.out, args.format)
    return EXIT_OK


COMMANDS = {"gen": _cmd_gen, "solve": _cmd_solve, "eval": _cmd_eval,
            "anytime": _cmd_anytime, "sweep": _cmd_sweep}


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if hasattr(args, "runs"):
            _check_runs(parser, args)
        return COMMANDS[args.cmd](args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MODEL


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
