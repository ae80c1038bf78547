"""Latent-space recovery solvers.

``admm_solve`` minimizes ``||M G(z) - y||_1`` with a linearized ADMM: each
z-step replaces ``G`` by its first-order expansion at the current iterate and
solves the resulting least-squares problem with a pseudo-inverse.
``gd_solve`` runs gradient descent on the squared-l1, squared-l2 and
ridge-regularized squared-l2 objectives.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .errors import InvalidInputError, ShapeError
from .generator import GeneratorNet, forward, jacobian
from .numerics import as_matrix, as_vector, make_rng, pseudo_inverse, soft_threshold

STATUSES = ("converged", "max_iter", "numerical_failure")
OBJECTIVES = ("l1_squared", "l2_squared", "l2_squared_reg")
GRAD_TOL = 1e-9


@dataclass(frozen=True)
class FixedStep:
    gamma: float = 1e-3


@dataclass(frozen=True)
class Backtracking:
    """Armijo backtracking.

    Each search starts from ``min(gamma0, previous_step / shrink)``, so a
    step that had to shrink is not re-grown from ``gamma0`` every iteration.
    """
    gamma0: float = 1.0
    shrink: float = 0.5
    c: float = 1e-4


@dataclass(frozen=True)
class AdmmConfig:
    rho: float = 1.0
    max_iter: int = 1000
    primal_tol: float = 1e-8
    dual_tol: float = 1e-8
    # explicit start vector, or an integer seed for a N(0, I) draw
    z_init: object = 0

    def __post_init__(self):
        if not self.rho > 0:
            raise InvalidInputError(f"rho must be positive, got {self.rho}")
        if self.max_iter < 1:
            raise InvalidInputError("max_iter must be >= 1")
        if not (self.primal_tol > 0 and self.dual_tol > 0):
            raise InvalidInputError("tolerances must be positive")


@dataclass(frozen=True)
class GdConfig:
    objective: str = "l1_squared"
    reg_weight: float = 0.0
    max_steps: int = 1000
    step_rule: FixedStep | Backtracking = field(default_factory=Backtracking)
    z_init: object = 0

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise InvalidInputError(f"unknown objective {self.objective!r}")
        if self.objective == "l2_squared_reg":
            if not self.reg_weight > 0:
                raise InvalidInputError("l2_squared_reg needs reg_weight > 0")
        elif self.reg_weight != 0:
            raise InvalidInputError(f"{self.objective} takes no regularization")
        if self.max_steps < 1:
            raise InvalidInputError("max_steps must be >= 1")


@dataclass(frozen=True)
class TraceRow:
    iter: int
    objective: float
    primal_residual: float
    dual_residual: float
    eps_m: float


@dataclass(frozen=True, eq=False)
class SolveResult:
    z_hat: np.ndarray
    x_hat: np.ndarray
    eps_m: float
    eps_r: float
    iterations_run: int
    status: str
    trace: list[TraceRow]

    @property
    def objectives(self) -> list[float]:
        return [row.objective for row in self.trace]


def measurement_error(M, y, x_hat) -> float:
    return float(np.sum(np.abs(y - M @ x_hat)))


def reconstruction_error(x_true, x_hat) -> float:
    d = np.asarray(x_true) - x_hat
    return float(d @ d)


def _check_problem(net: GeneratorNet, M, y):
    M = as_matrix(M, "M")
    y = as_vector(y, "y")
    if M.shape[1] != net.output_dim:
        raise ShapeError(f"M has {M.shape[1]} columns, generator outputs {net.output_dim}")
    if M.shape[0] != y.shape[0]:
        raise ShapeError(f"M has {M.shape[0]} rows but y has length {y.shape[0]}")
    return M, y


def initial_z(z_init, k: int) -> np.ndarray:
    if isinstance(z_init, (int, np.integer, np.random.Generator)):
        return make_rng(z_init).standard_normal(k)
    z = as_vector(z_init, "z_init")
    if z.shape[0] != k:
        raise ShapeError(f"z_init has length {z.shape[0]}, expected {k}")
    return z.copy()


def _finish(net, M, y, z, iters, status, trace, x_true) -> SolveResult:
    x_hat = forward(net, z)
    eps_r = reconstruction_error(x_true, x_hat) if x_true is not None else float("nan")
    return SolveResult(z, x_hat, measurement_error(M, y, x_hat), eps_r, iters, status, trace)


# --- linearized ADMM ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AdmmState:
    """Iterate ``q`` of the linearized ADMM (``q = 0`` is the start point)."""
    q: int
    z: np.ndarray
    w: np.ndarray
    lam: np.ndarray
    Gz: np.ndarray
    primal_residual: float
    dual_residual: float


def admm_iterates(net: GeneratorNet, M, y, cfg: AdmmConfig, z0=None) -> Iterator[AdmmState]:
    """Yield the ADMM iterates without any stopping rule.

    Raises ``FloatingPointError`` if an iterate becomes non-finite.
    """
    M, y = _check_problem(net, M, y)
    rho = cfg.rho
    z = initial_z(cfg.z_init if z0 is None else z0, net.input_dim)
    w = np.zeros(M.shape[0])
    lam = np.zeros(M.shape[0])
    Gz = forward(net, z)
    yield AdmmState(0, z, w, lam, Gz, np.nan, np.nan)
    q = 0
    while True:
        A = M @ jacobian(net, z)
        rhs = w + y - lam / rho - (M @ Gz - A @ z)
        z = pseudo_inverse(A) @ rhs
        Gz = forward(net, z)
        MGz = M @ Gz
        w_new = soft_threshold(MGz - y + lam / rho, 1.0 / rho)
        r = MGz - w_new - y
        lam = lam + rho * r
        dual = float(np.linalg.norm(rho * (w_new - w)))
        w = w_new
        q += 1
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(lam))):
            raise FloatingPointError(f"non-finite iterate at q={q}")
        yield AdmmState(q, z, w, lam, Gz, float(np.linalg.norm(r)), dual)


def admm_solve(net: GeneratorNet, M, y, cfg: AdmmConfig = AdmmConfig(),
               x_true=None) -> SolveResult:
    """Minimize ``||M G(z) - y||_1`` by linearized ADMM.

    Stops after ``cfg.max_iter`` z-updates, or earlier once the primal
    residual ``||M G(z) - w - y||_2`` and the dual change
    ``||rho (w_new - w_old)||_2`` are both under their tolerances.
    """
    M, y = _check_problem(net, M, y)
    trace: list[TraceRow] = []
    last = None
    status = "max_iter"
    it = admm_iterates(net, M, y, cfg)
    try:
        last = next(it)
        for state in it:
            last = state
            eps_m = float(np.sum(np.abs(M @ state.Gz - y)))
            trace.append(TraceRow(state.q, eps_m, state.primal_residual,
                                  state.dual_residual, eps_m))
            if state.primal_residual <= cfg.primal_tol and state.dual_residual <= cfg.dual_tol:
                status = "converged"
                break
            if state.q >= cfg.max_iter:
                break
    except (FloatingPointError, np.linalg.LinAlgError, InvalidInputError):
        status = "numerical_failure"
    return _finish(net, M, y, last.z, last.q, status, trace, x_true)


# --- gradient descent --------------------------------------------------------

def _objective_and_grad(net, M, y, z, cfg: GdConfig, want_grad=True):
    Gz = forward(net, z)
    r = M @ Gz - y
    if cfg.objective == "l1_squared":
        l1 = np.sum(np.abs(r))
        f = l1 * l1
        g_out = 2.0 * l1 * np.sign(r)
    else:
        f = r @ r
        g_out = 2.0 * r
    if cfg.objective == "l2_squared_reg":
        f = f + cfg.reg_weight * (z @ z)
    if not want_grad:
        return float(f), None, Gz
    g = jacobian(net, z).T @ (M.T @ g_out)
    if cfg.objective == "l2_squared_reg":
        g = g + 2.0 * cfg.reg_weight * z
    return float(f), g, Gz


def objective_gradient(net: GeneratorNet, M, y, z, cfg: GdConfig) -> np.ndarray:
    """Gradient of the configured objective at ``z`` (``sign(0) = 0``)."""
    M, y = _check_problem(net, M, y)
    return _objective_and_grad(net, M, y, as_vector(z), cfg)[1]


def gd_solve(net: GeneratorNet, M, y, cfg: GdConfig = GdConfig(), x_true=None) -> SolveResult:
    """Gradient descent on ``z`` for the configured objective.

    Stops on ``max_steps``, on gradient norm <= 1e-9 (``converged``), or when
    backtracking can no longer find a decreasing step (also reported as
    ``converged``: the iterate is stationary to machine precision).
    """
    M, y = _check_problem(net, M, y)
    z = initial_z(cfg.z_init, net.input_dim)
    rule = cfg.step_rule
    f, g, Gz = _objective_and_grad(net, M, y, z, cfg)
    trace: list[TraceRow] = []
    status = "max_iter"
    step = rule.gamma0 if isinstance(rule, Backtracking) else rule.gamma
    steps = 0
    while steps < cfg.max_steps:
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            status = "numerical_failure"
            break
        gnorm2 = float(g @ g)
        if np.sqrt(gnorm2) <= GRAD_TOL:
            status = "converged"
            break
        if isinstance(rule, Backtracking):
            step = min(rule.gamma0, step / rule.shrink)
            accepted = False
            while True:
                z_new = z - step * g
                if np.array_equal(z_new, z):
                    break
                f_new, _, _ = _objective_and_grad(net, M, y, z_new, cfg, want_grad=False)
                if f_new <= f - rule.c * step * gnorm2:
                    accepted = True
                    break
                step *= rule.shrink
            if not accepted:
                status = "converged"
                break
        else:
            z_new = z - step * g
        z = z_new
        f, g, Gz = _objective_and_grad(net, M, y, z, cfg)
        steps += 1
        eps_m = float(np.sum(np.abs(M @ Gz - y)))
        trace.append(TraceRow(steps, f, float("nan"), float("nan"), eps_m))
    if status == "max_iter" and not np.isfinite(f):
        status = "numerical_failure"
    return _finish(net, M, y, z, steps, status, trace, x_true)


# --- restarts ------------------------------------------------------------------

def solve_once(net, M, y, cfg, x_true=None) -> SolveResult:
    if isinstance(cfg, AdmmConfig):
        return admm_solve(net, M, y, cfg, x_true)
    if isinstance(cfg, GdConfig):
        return gd_solve(net, M, y, cfg, x_true)
    raise InvalidInputError(f"unknown solver config {type(cfg).__name__}")


def solve_with_restarts(net: GeneratorNet, M, y, base_cfg, restarts: int, seed,
                        x_true=None) -> SolveResult:
    """Best-of-``restarts`` by measurement error.

    Start points are successive N(0, I_k) draws from ``seed``; the first one
    equals the start a single run with ``z_init=seed`` would use. Ground truth
    is never consulted when choosing.
    """
    if restarts < 1:
        raise InvalidInputError("restarts must be >= 1")
    rng = make_rng(seed)
    best = None
    failures = []
    for _ in range(restarts):
        cfg = replace(base_cfg, z_init=rng.standard_normal(net.input_dim))
        res = solve_once(net, M, y, cfg, x_true)
        if res.status == "numerical_failure" or not np.isfinite(res.eps_m):
            failures.append(res)
            continue
        if best is None or res.eps_m < best.eps_m:
            best = res
    if best is None:
        return failures[0]
    return best


def write_trace_csv(result: SolveResult, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "objective", "primal_residual", "dual_residual", "eps_m"])
        for row in result.trace:
            writer.writerow([row.iter, repr(row.objective), repr(row.primal_residual),
                             repr(row.dual_residual), repr(row.eps_m)])
