"""ADR of policy snapshots taken during one solve, for several seeds.

    python scripts/anytime.py --domain tag -D 10 --checkpoints 1 2 4 8 16 32 --seeds 0 1 2
"""
import argparse
import csv
import sys

from b3rtdp.domains import make_domain
from b3rtdp.evaluation import anytime_curve
from b3rtdp.heuristics import blind_upper_bound, solve_qmdp
from b3rtdp.model import transform_to_goal_pomdp
from b3rtdp.solver import B3RTDP, SolverParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--domain", default="tag")
    ap.add_argument("-D", type=int, default=10)
    ap.add_argument("--alpha", type=float, default=0.95)
    ap.add_argument("--checkpoints", type=float, nargs="+", default=[0, 1, 2, 4, 8, 16, 32])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--runs", type=int, default=500)
    args = ap.parse_args()

    md = make_domain(args.domain)
    m = transform_to_goal_pomdp(md)
    lo, hi = solve_qmdp(m), blind_upper_bound(m)
    B3RTDP(m, SolverParams(time_limit=0.5), lower=lo, upper=hi).run()  # compile kernels

    out = csv.writer(sys.stdout)
    out.writerow(["seed", "checkpoint_s", "solve_s", "adr", "ci95", "heuristic_only"])
    for seed in args.seeds:
        params = SolverParams(D=args.D, alpha=args.alpha, seed=seed)
        for cp, el, rep in anytime_curve(md, m, params, args.checkpoints, args.runs,
                                         eval_seed=seed, lower=lo, upper=hi):
            out.writerow([seed, cp, f"{el:.2f}", f"{rep.mean:.3f}", f"{rep.half_width_95:.3f}",
                          rep.heuristic_only])
            sys.stdout.flush()


if __name__ == "__main__":
    main()
