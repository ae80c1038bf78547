"""Solve the l1 fit exactly by linear programming on the outlier sweep instances.

For an identity generator ``G(z) = W z + G(0)``, ``min_z ||M G(z) - y||_1`` is
a linear program. Its exact solution tells whether a failure belongs to the
l1 objective itself or to the iterative solver.

    python3 scripts/l1_threshold_check.py --trials 100 --outliers 3,6,12,14
"""

import argparse

import numpy as np
from scipy.optimize import linprog

from gencs.generator import composite_weight, forward
from gencs.harness import ExperimentConfig, trial_seed
from gencs.numerics import gaussian_matrix
from gencs.sensing import OutlierSpec, SensingModel, observe


def l1_fit(A, b):
    """``argmin_z ||A z - b||_1`` via ``min 1't  s.t.  -t <= A z - b <= t``."""
    m, k = A.shape
    c = np.concatenate([np.zeros(k), np.ones(m)])
    I = np.eye(m)
    A_ub = np.block([[A, -I], [-A, -I]])
    b_ub = np.concatenate([b, -b])
    bounds = [(None, None)] * k + [(0, None)] * m
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    return res.x[:k]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--m", type=int, default=30)
    p.add_argument("--outliers", default="3,6,12,14")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=9)
    args = p.parse_args()
    l_list = [int(t) for t in args.outliers.split(",")]
    cfg = ExperimentConfig(m_list=[args.m], l_list=l_list, trials=args.trials, seed=args.seed)
    net = cfg.build_net()
    W, offset = composite_weight(net), forward(net, np.zeros(net.input_dim))
    n = net.output_dim
    for ci, l in enumerate(l_list):
        ok = 0
        for t in range(args.trials):
            # mirrors the harness's per-trial draw order
            rng = np.random.default_rng(trial_seed(cfg.seed, ci, t))
            M = gaussian_matrix(args.m, n, rng)
            z0 = rng.standard_normal(net.input_dim)
            obs = observe(net, SensingModel(M, 0.0, OutlierSpec(l)), z0, rng)
            z = l1_fit(M @ W, obs.y - M @ offset)
            ok += np.sum((forward(net, z) - obs.x0) ** 2) / n <= 1e-4
        print(f"m={args.m} l={l}: exact l1 minimizer succeeds in {ok}/{args.trials}")


if __name__ == "__main__":
    main()
