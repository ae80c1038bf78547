"""Command-line entry point: ``gencs {run,theory,gen-weights,replay}``.

Exit codes: 0 ok, 1 usage, 2 I/O, 3 theory violations found.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import theory
from .errors import InvalidInputError, NoBudgetError, ShapeError, UnsupportedOperationError
from .generator import (DEFAULT_LEAK, Activation, composite_weight, forward, init_gaussian,
                        load, save)
from .harness import SOLVERS, ExperimentConfig, read_config_file, run_experiment
from .numerics import gaussian_matrix
from .sensing import OutlierSpec, load_observation, make_outliers, outlier_budget
from .solvers import measurement_error, solve_with_restarts, write_trace_csv

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VIOLATION = 0, 1, 2, 3
ACTIVATIONS = {"identity": "identity", "relu": "relu", "leaky": "leaky_relu"}
FLAG_SWITCHES = {"save-observations", "gaussian-bias"}

log = logging.getLogger("gencs")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def str_list(text: str) -> list[str]:
    return [t for t in text.replace(" ", "").split(",") if t]


def _net_flags(p, default_dims):
    p.add_argument("--dims", type=int_list, default=default_dims,
                   help="layer widths k,n1,...,n (comma separated)")
    p.add_argument("--activation", choices=sorted(ACTIVATIONS), default="identity")
    p.add_argument("--leak", type=float, default=None, help="leaky-ReLU slope h in (0,1)")
    p.add_argument("--weights", default=None, help="load the generator from a GENREC file")
    p.add_argument("--seed", type=int, default=0)


def _solver_flags(p):
    p.add_argument("--solvers", type=str_list, default=["admm_l1"],
                   help=f"comma separated subset of {','.join(SOLVERS)}")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--reg-weight", type=float, default=0.1)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--max-iter", type=int, default=1000, help="ADMM iteration cap")
    p.add_argument("--max-steps", type=int, default=1000, help="GD step cap")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gencs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="Monte-Carlo sweep over measurements and outliers")
    run.add_argument("--config", default=None)
    _net_flags(run, [5, 20, 40])
    run.add_argument("--m", type=int_list, default=[10, 15, 20, 25, 30])
    run.add_argument("--outliers", type=int_list, default=[3])
    run.add_argument("--noise", type=float, default=0.0, help="noise RMS sqrt(E||eta||^2)")
    _solver_flags(run)
    run.add_argument("--trials", type=int, default=10)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--success-threshold", type=float, default=1e-4)
    run.add_argument("--save-observations", action="store_true")
    run.add_argument("--out", default="results")

    th = sub.add_parser("theory", help="certify recovery conditions on a desk-scale instance")
    th.add_argument("--config", default=None)
    _net_flags(th, [2, 5, 10])
    th.add_argument("--m", type=int, default=8)
    th.add_argument("--outliers", type=int, default=2)
    th.add_argument("--candidates", type=int, default=1000)
    th.add_argument("--beta-samples", type=int, default=100000)
    th.add_argument("--out", default="theory_out")

    gw = sub.add_parser("gen-weights", help="write a random generator as a GENREC file")
    gw.add_argument("--config", default=None)
    _net_flags(gw, [2, 5, 10])
    gw.add_argument("--gaussian-bias", action="store_true")
    gw.add_argument("--out", required=True, help="output file path")

    rp = sub.add_parser("replay", help="re-solve a serialized observation")
    rp.add_argument("--config", default=None)
    rp.add_argument("--obs", required=True)
    rp.add_argument("--weights", required=True)
    rp.add_argument("--seed", type=int, default=0)
    _solver_flags(rp)
    rp.add_argument("--out", default=None, help="directory for replay.csv and traces")
    return parser


def _config_argv(path: str) -> list[str]:
    argv = []
    for key, value in read_config_file(path).items():
        if key == "config":
            continue
        if key in FLAG_SWITCHES:
            if value.lower() in ("1", "true", "yes", "on"):
                argv.append(f"--{key}")
        else:
            argv.extend([f"--{key}", value])
    return argv


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            extra = _config_argv(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        idx = argv.index(args.command) + 1
        args = parser.parse_args(argv[:idx] + extra + argv[idx:])
    return args


def _activation(args) -> Activation:
    kind = ACTIVATIONS[args.activation]
    if kind == "leaky_relu":
        return Activation(kind, DEFAULT_LEAK if args.leak is None else args.leak)
    if args.leak is not None:
        raise InvalidInputError("--leak only applies to --activation leaky")
    return Activation(kind)


def _build_net(args):
    if args.weights:
        return load(args.weights)
    return init_gaussian(args.dims, _activation(args), args.seed,
                         gaussian_bias=getattr(args, "gaussian_bias", False))


# --- subcommands -----------------------------------------------------------------

def cmd_run(args) -> int:
    _activation(args)
    cfg = ExperimentConfig(
        dims=args.dims, activation=ACTIVATIONS[args.activation], leak=args.leak,
        weights=args.weights, m_list=args.m, l_list=args.outliers, noise_rms=args.noise,
        solvers=args.solvers, rho=args.rho, max_iter=args.max_iter, max_steps=args.max_steps,
        reg_weight=args.reg_weight, restarts=args.restarts, trials=args.trials,
        seed=args.seed, jobs=args.jobs, success_threshold=args.success_threshold,
        out=args.out, save_observations=args.save_observations,
    )
    _, cells = run_experiment(cfg)
    print(f"{'solver':<12} {'m':>4} {'l':>4} {'eps_r mean':>12} {'+-ci95':>10} {'success':>8}")
    for c in cells:
        print(f"{c.solver:<12} {c.m:>4} {c.l:>4} {c.eps_r_mean:>12.4g} "
              f"{c.eps_r_ci95:>10.3g} {c.success_rate:>8.2f}")
    print(f"wrote {Path(args.out) / 'results.csv'} and summary.csv")
    return EXIT_OK


def run_theory(net, m: int, l: int, seed: int, n_candidates: int = 1000,
               beta_samples: int = 100000):
    """All certification checks for one instance; returns ``(items, lines)``."""
    rng = np.random.default_rng(seed)
    k, n = net.input_dim, net.output_dim
    M = gaussian_matrix(m, n, rng)
    z0 = rng.standard_normal(k)
    act = net.activation
    items = []
    lines = [f"generator dims={net.dims} activation={act.kind}"
             + (f" h={act.leak!r}" if act.kind == "leaky_relu" else ""),
             f"measurements m={m} outliers l={l} seed={seed}"]
    try:
        net.check_theory_dims()
    except (ShapeError, UnsupportedOperationError) as exc:
        lines.append(f"note: outside the guarantee's dimension conditions ({exc})")
    try:
        budget = outlier_budget(m, k)
        lines.append(f"certified outlier budget floor((m-1-k)/2) = {budget}"
                     + ("" if l <= budget else f"; l={l} EXCEEDS it"))
    except NoBudgetError as exc:
        lines.append(f"no outlier budget: {exc}")

    candidates = theory.generate_candidates(z0, n_candidates, rng)
    try:
        if act.kind == "identity":
            cert = theory.certify_rank(M @ composite_weight(net), k, l, seed=rng)
            items.append(("rank_composite", cert))
        elif act.kind == "leaky_relu":
            lines.append("leaky net: rank certified on M P(z, z0) for 20 sampled z "
                         "(linear budget applied to the reduced matrix)")
            for i, z in enumerate(candidates[:20]):
                P = theory.scaled_layer_product(net, z, z0)
                items.append((f"rank_scaled_{i}", theory.certify_rank(M @ P, k, l, seed=rng)))
    except NoBudgetError as exc:
        lines.append(f"rank certification skipped: {exc}")
    if act.kind == "relu":
        found = theory.relu_rank_deficiency_exhibit(net, M, rng)
        if found is None:
            lines.append("relu exhibit: no rank-deficient M P(z, z0) found")
        else:
            z, zz, rank = found
            lines.append("relu exhibit: zero slopes make M P(z, z0) rank-deficient "
                         f"(rank {rank} < k={k}) at z={z.tolist()} z0={zz.tolist()}; "
                         "the leaky-ReLU guarantee does not extend to ReLU")

    l0 = theory.check_l0_condition(net, M, z0, l, candidates)
    for tol in (1e-7, 1e-11):
        alt = theory.check_l0_condition(net, M, z0, l, candidates, rel_tol=tol)
        l0.notes[f"violations_at_{tol:g}"] = len(alt.violations)
    items.append(("l0_condition", l0))
    e, support = make_outliers(m, OutlierSpec(l), rng)
    items.append(("l1_condition", theory.check_l1_condition(net, M, z0, support, candidates)))
    h = act.leak if act.kind == "leaky_relu" else DEFAULT_LEAK
    pairs = rng.standard_normal((beta_samples, 2)) * 10.0
    items.append(("beta_lemma", theory.check_beta_lemma(h, pairs)))

    y = M @ forward(net, z0) + e
    grid = [z0] + candidates[:n_candidates]
    obj = theory.l0_objectives(net, M, y, grid)
    z_bf = theory.brute_force_l0_recovery(net, M, y, grid)
    margin = int(np.min(obj[1:]) - obj[0]) if len(grid) > 1 else 0
    bf = theory.ConditionReport("l0_separation", len(grid),
                                notes={"margin": margin, "objective_at_z0": int(obj[0])})
    if not (np.array_equal(z_bf, z0) and margin >= 1):
        bf.violations.append(theory.Violation({"returned": z_bf.tolist()}, {"margin": margin}))
    items.append(("brute_force_l0", bf))
    return items, lines


def cmd_theory(args) -> int:
    net = _build_net(args)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    items, lines = run_theory(net, args.m, args.outliers, args.seed, args.candidates,
                              args.beta_samples)
    rows = theory.report_rows(items)
    failed = [r for r in rows if not r["passed"]]
    for name, item in items:
        if isinstance(item, theory.RankCertificate):
            status = "PASS" if item.all_full_rank else f"FAIL (witness rows {item.witness})"
            lines.append(f"{name}: {item.mode}, {item.submatrices_checked} subsets of size "
                         f"{item.subset_size}, min sigma {item.min_singular_value_seen:.3e} "
                         f"-> {status}")
        else:
            lines.append(f"{name}: {item.summary()}")
            sens = {k: v for k, v in item.notes.items() if k.startswith("violations_at_")}
            if sens:
                lines.append("  zero-threshold sensitivity: "
                             + ", ".join(f"{k[len('violations_at_'):]} -> {v}"
                                         for k, v in sens.items()))
    lines.append("RESULT: " + ("all checks passed" if not failed
                               else f"{len(failed)} check(s) with violations"))
    text = "\n".join(lines) + "\n"
    (out / "theory_report.txt").write_text(text)
    (out / "theory_report.csv").write_text(theory.rows_to_csv(rows))
    print(text, end="")
    return EXIT_VIOLATION if failed else EXIT_OK


def cmd_gen_weights(args) -> int:
    net = _build_net(args)
    save(net, args.out)
    print(f"wrote {args.out} ({len(net.layers)} layers, dims {net.dims})")
    return EXIT_OK


def cmd_replay(args) -> int:
    obs, extra = load_observation(args.obs)
    net = load(args.weights)
    cfg = ExperimentConfig(solvers=args.solvers, rho=args.rho, max_iter=args.max_iter,
               max_steps=args.max_steps, reg_weight=args.reg_weight, restarts=args.restarts)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    rows = []
    for solver in args.solvers:
        stored = extra.get(f"z_hat_{solver}")
        if stored is not None:
            print(f"{solver}: stored z_hat gives eps_m="
                  f"{measurement_error(obs.M, obs.y, forward(net, stored))!r}")
        res = solve_with_restarts(net, obs.M, obs.y, cfg.solver_config(solver),
                                  args.restarts, args.seed, obs.x0)
        print(f"{solver}: eps_m={res.eps_m!r} eps_r={res.eps_r!r} "
              f"iters={res.iterations_run} status={res.status}")
        rows.append([solver, repr(res.eps_m), repr(res.eps_r), res.iterations_run, res.status])
        if out:
            write_trace_csv(res, out / f"trace_{solver}.csv")
    if out:
        with open(out / "replay.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["solver", "eps_m", "eps_r", "iters", "status"])
            w.writerows(rows)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "theory": cmd_theory, "gen-weights": cmd_gen_weights,
            "replay": cmd_replay}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InvalidInputError, ShapeError, UnsupportedOperationError, NoBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
