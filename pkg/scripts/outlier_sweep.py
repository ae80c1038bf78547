"""Success rate versus number of outliers at fixed measurements.

Outlier counts past floor((m - 1 - k) / 2) fall outside the certified regime
and are run anyway, with a warning.

    python3 scripts/outlier_sweep.py --m 30 --outliers 3,6,9,12,14,16
"""

import argparse
import logging

from gencs.harness import ExperimentConfig, run_experiment
from gencs.sensing import outlier_budget


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--m", type=int, default=30)
    p.add_argument("--outliers", default="3,6,12,14")
    p.add_argument("--rho", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="runs/outlier_sweep")
    args = p.parse_args()
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    cfg = ExperimentConfig(m_list=[args.m], l_list=[int(t) for t in args.outliers.split(",")],
                           solvers=["admm_l1"], rho=args.rho, trials=args.trials,
                           restarts=args.restarts, seed=args.seed, jobs=args.jobs, out=args.out)
    budget = outlier_budget(args.m, cfg.dims[0])
    _, cells = run_experiment(cfg)
    for c in sorted(cells, key=lambda c: c.l):
        tag = "" if c.l <= budget else "  (over budget)"
        print(f"l={c.l:<3} success={c.success_rate:.2f} eps_r/n={c.eps_r_per_dim_mean:.3e}{tag}")


if __name__ == "__main__":
    main()
