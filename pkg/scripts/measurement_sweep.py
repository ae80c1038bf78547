"""Reconstruction error versus number of measurements.

Identity generator [5, 20, 40], three large outliers, every solver on the same
instances. Writes results.csv and summary.csv under --out and prints the
per-cell means.

    python3 scripts/measurement_sweep.py --trials 50 --out runs/msweep
"""

import argparse

from gencs.harness import SOLVERS, ExperimentConfig, run_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--m", default="10,15,20,25,30")
    p.add_argument("--outliers", type=int, default=3)
    p.add_argument("--solvers", default=",".join(SOLVERS))
    p.add_argument("--rho", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="runs/measurement_sweep")
    args = p.parse_args()
    cfg = ExperimentConfig(m_list=[int(t) for t in args.m.split(",")],
                           l_list=[args.outliers], solvers=args.solvers.split(","),
                           rho=args.rho, trials=args.trials, restarts=args.restarts,
                           seed=args.seed, jobs=args.jobs, out=args.out)
    _, cells = run_experiment(cfg)
    for c in sorted(cells, key=lambda c: (c.solver, c.m)):
        print(f"{c.solver:<12} m={c.m:<3} eps_r/n={c.eps_r_per_dim_mean:.3e} "
              f"success={c.success_rate:.2f}")


if __name__ == "__main__":
    main()
