"""Convergence time over a (D, alpha) grid, with Spearman rank correlations.

Times of runs that hit the cap are reported at the cap (right-censored).

    python scripts/sweep_trends.py --domain tag -D 1 2 3 --alpha 0.65 0.95 --seeds 0 1 2 3 4
"""
import argparse
import csv
import itertools
import sys

from scipy.stats import spearmanr

from b3rtdp.domains import make_domain
from b3rtdp.heuristics import blind_upper_bound, solve_qmdp
from b3rtdp.model import transform_to_goal_pomdp
from b3rtdp.solver import B3RTDP, SolverParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--domain", default="tag")
    ap.add_argument("-D", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--alpha", type=float, nargs="+", default=[0.65, 0.95])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--cap", type=float, default=45.0, help="per-solve wall-clock cap (s)")
    args = ap.parse_args()

    m = transform_to_goal_pomdp(make_domain(args.domain))
    lo, hi = solve_qmdp(m), blind_upper_bound(m)
    B3RTDP(m, SolverParams(time_limit=0.5), lower=lo, upper=hi).run()  # compile kernels

    out = csv.writer(sys.stdout)
    out.writerow(["D", "alpha", "seed", "time_s", "converged", "trials", "records"])
    rows = []
    for D, alpha, seed in itertools.product(args.D, args.alpha, args.seeds):
        s = B3RTDP(m, SolverParams(D=D, alpha=alpha, seed=seed, time_limit=args.cap),
                   lower=lo, upper=hi)
        st = s.run()
        t = min(st.elapsed, args.cap)
        rows.append((D, alpha, t))
        out.writerow([D, alpha, seed, f"{t:.2f}", st.converged, st.trials, st.table_records])
        sys.stdout.flush()
    Ds, alphas, times = zip(*rows)
    print(f"# spearman rho(time, D) = {spearmanr(Ds, times).statistic:.3f}", file=sys.stderr)
    print(f"# spearman rho(time, alpha) = {spearmanr(alphas, times).statistic:.3f}", file=sys.stderr)


if __name__ == "__main__":
    main()
