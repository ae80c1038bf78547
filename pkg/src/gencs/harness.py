"""Seeded Monte-Carlo sweeps over measurement and outlier counts."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import InvalidInputError, NoBudgetError
from .generator import Activation, GeneratorNet, init_gaussian, load, save
from .numerics import gaussian_matrix
from .sensing import OutlierSpec, SensingModel, observe, outlier_budget, save_observation
from .solvers import AdmmConfig, Backtracking, GdConfig, solve_with_restarts

log = logging.getLogger(__name__)

SOLVERS = ("admm_l1", "gd_l1sq", "gd_l2sq", "gd_l2sq_reg")
RESULT_FIELDS = ["solver", "m", "l", "trial", "seed", "eps_m", "eps_r", "eps_r_per_dim",
                 "iters", "status"]
SUMMARY_FIELDS = ["solver", "m", "l", "trials", "eps_r_mean", "eps_r_std", "eps_r_ci95",
                  "eps_r_per_dim_mean", "eps_m_mean", "eps_m_std", "eps_m_ci95",
                  "success_rate"]


@dataclass
class ExperimentConfig:
    dims: list[int] = field(default_factory=lambda: [5, 20, 40])
    activation: str = "identity"
    leak: float | None = None
    weights: str | None = None
    m_list: list[int] = field(default_factory=lambda: [10, 15, 20, 25, 30])
    l_list: list[int] = field(default_factory=lambda: [3])
    noise_rms: float = 0.0
    solvers: list[str] = field(default_factory=lambda: ["admm_l1"])
    rho: float = 1.0
    max_iter: int = 1000
    max_steps: int = 1000
    reg_weight: float = 0.1
    restarts: int = 1
    trials: int = 10
    seed: int = 0
    jobs: int = 1
    success_threshold: float = 1e-4
    out: str | None = None
    save_observations: bool = False

    def __post_init__(self):
        if not self.m_list or not self.l_list:
            raise InvalidInputError("m and outlier lists must be nonempty")
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        if self.restarts < 1:
            raise InvalidInputError("restarts must be >= 1")
        unknown = set(self.solvers) - set(SOLVERS)
        if unknown or not self.solvers:
            raise InvalidInputError(f"unknown solvers {sorted(unknown)}; choose from {SOLVERS}")
        if self.activation not in ("identity", "relu", "leaky_relu"):
            raise InvalidInputError(f"unknown activation {self.activation!r}")

    def build_net(self) -> GeneratorNet:
        if self.weights:
            return load(self.weights)
        leak = self.leak if self.activation == "leaky_relu" else None
        seq = np.random.SeedSequence([self.seed, 0xFEED])
        return init_gaussian(self.dims, Activation(self.activation, leak),
                             np.random.default_rng(seq))

    def solver_config(self, solver: str):
        if solver == "admm_l1":
            return AdmmConfig(rho=self.rho, max_iter=self.max_iter)
        objective = {"gd_l1sq": "l1_squared", "gd_l2sq": "l2_squared",
                     "gd_l2sq_reg": "l2_squared_reg"}[solver]
        reg = self.reg_weight if solver == "gd_l2sq_reg" else 0.0
        return GdConfig(objective, reg, self.max_steps, Backtracking())


@dataclass(frozen=True)
class CellResult:
    m: int
    l: int
    solver: str
    trials: int
    eps_r_mean: float
    eps_r_std: float
    eps_r_ci95: float
    eps_r_per_dim_mean: float
    eps_m_mean: float
    eps_m_std: float
    eps_m_ci95: float
    success_rate: float


def trial_seed(base_seed: int, cell_index: int, trial: int) -> int:
    seq = np.random.SeedSequence([base_seed, cell_index, trial])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def _stats(values) -> tuple[float, float, float]:
    v = np.asarray(values, dtype=np.float64)
    mean = float(v.mean())
    if v.size < 2:
        return mean, 0.0, float("nan")
    std = float(v.std(ddof=1))
    half = float(stats.t.ppf(0.975, v.size - 1) * std / np.sqrt(v.size))
    return mean, std, half


def _run_trial(cfg: ExperimentConfig, net: GeneratorNet, cell_index: int, m: int, l: int,
               trial: int, obs_dir: str | None) -> list[dict]:
    seed = trial_seed(cfg.seed, cell_index, trial)
    rng = np.random.default_rng(seed)
    M = gaussian_matrix(m, net.output_dim, rng)
    z0 = rng.standard_normal(net.input_dim)
    model = SensingModel(M, cfg.noise_rms, OutlierSpec(l))
    obs = observe(net, model, z0, rng)
    restart_seed = int(rng.integers(2**32))
    rows, z_hats = [], {}
    n = net.output_dim
    for solver in cfg.solvers:
        res = solve_with_restarts(net, M, obs.y, cfg.solver_config(solver), cfg.restarts,
                                  restart_seed, obs.x0)
        z_hats[solver] = res.z_hat
        rows.append({"solver": solver, "m": m, "l": l, "trial": trial, "seed": seed,
                     "eps_m": res.eps_m, "eps_r": res.eps_r, "eps_r_per_dim": res.eps_r / n,
                     "iters": res.iterations_run, "status": res.status})
    if obs_dir is not None:
        save_observation(obs, Path(obs_dir) / f"m{m}_l{l}_t{trial}.obs",
                         extra={f"z_hat_{s}": z for s, z in z_hats.items()})
    return rows


def _run_trial_packed(args):
    return _run_trial(*args)


def check_output_dir(out) -> Path:
    """Create ``out`` and prove it is writable; raises ``OSError`` otherwise."""
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    probe = path / ".write_probe"
    probe.write_text("")
    probe.unlink()
    return path


def budget_warnings(cfg: ExperimentConfig, k: int) -> list[str]:
    msgs = []
    for m in cfg.m_list:
        for l in cfg.l_list:
            try:
                budget = outlier_budget(m, k)
            except NoBudgetError:
                msgs.append(f"m={m} <= k={k}: no certified outlier budget")
                continue
            if l > budget:
                msgs.append(f"m={m}, l={l} exceeds the certified budget {budget}")
    return msgs


def run_experiment(cfg: ExperimentConfig) -> tuple[list[dict], list[CellResult]]:
    """Run every (m, l, trial) and aggregate per (m, l, solver).

    All solvers in a trial see the same instance and the same restart starts.
    Output is deterministic in ``cfg.seed`` regardless of ``cfg.jobs``.
    """
    out = check_output_dir(cfg.out) if cfg.out else None
    net = cfg.build_net()
    for msg in budget_warnings(cfg, net.input_dim):
        log.warning(msg)
    obs_dir = None
    if out is not None and cfg.save_observations:
        obs_dir = out / "observations"
        obs_dir.mkdir(exist_ok=True)
        save(net, out / "generator.gen")
    cells = [(m, l) for m in cfg.m_list for l in cfg.l_list]
    tasks = [(cfg, net, ci, m, l, t, None if obs_dir is None else str(obs_dir))
             for ci, (m, l) in enumerate(cells) for t in range(cfg.trials)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunks = list(pool.map(_run_trial_packed, tasks))
    else:
        chunks = [_run_trial_packed(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]
    summary = summarize(rows, cfg.success_threshold)
    if out is not None:
        write_results(rows, out / "results.csv")
        write_summary(summary, out / "summary.csv")
    return rows, summary


def summarize(rows: list[dict], success_threshold: float = 1e-4) -> list[CellResult]:
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["m"], row["l"], row["solver"]), []).append(row)
    out = []
    for (m, l, solver), rs in groups.items():
        er = [r["eps_r"] for r in rs]
        em = [r["eps_m"] for r in rs]
        per_dim = [r["eps_r_per_dim"] for r in rs]
        r_mean, r_std, r_ci = _stats(er)
        m_mean, m_std, m_ci = _stats(em)
        success = float(np.mean([p <= success_threshold for p in per_dim]))
        out.append(CellResult(m, l, solver, len(rs), r_mean, r_std, r_ci,
                              float(np.mean(per_dim)), m_mean, m_std, m_ci, success))
    return out


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_results(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_FIELDS)
        for row in rows:
            w.writerow([_fmt(row[f]) for f in RESULT_FIELDS])


def write_summary(cells: list[CellResult], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for c in cells:
            w.writerow([_fmt(getattr(c, f)) for f in SUMMARY_FIELDS])


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("_", "-")] = value
    return out

