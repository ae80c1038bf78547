"""Finite certificates for outlier-robust recovery conditions.

Exact recovery of ``z0`` from ``y = M G(z0) + e`` with ``||e||_0 <= l`` holds
when ``M G(z) - M G(z0)`` has at least ``2l + 1`` nonzeros for every
``z != z0``. For linear generators that reduces to a rank condition on the
composite matrix ``M W``: every ``m - (2l + 1)`` of its rows must have rank
``k``. Leaky-ReLU nets reduce to the same form through row-scaled weight
matrices. The checks here are numerical and sampled; a clean report means
"no violation found", not a proof.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NoBudgetError
from .generator import GeneratorNet, forward, forward_with_preactivations, jacobian
from .numerics import EPS, as_matrix, as_vector, make_rng, numerical_rank

EXHAUSTIVE_LIMIT = 10**6
SAMPLED_SUBSETS = 10**4
ZERO_REL_TOL = 1e-9
CONDITIONS = ("l0_separation", "l1_support_inequality", "beta_bounds", "rank")


@dataclass(frozen=True)
class RankCertificate:
    rows_total: int
    k: int
    l: int
    submatrices_checked: int
    mode: str
    all_full_rank: bool
    min_singular_value_seen: float
    tolerance: float
    witness: tuple[int, ...] | None = None

    @property
    def subset_size(self) -> int:
        return self.rows_total - (2 * self.l + 1)


@dataclass
class Violation:
    witness: dict
    observed: dict


@dataclass
class ConditionReport:
    condition: str
    instances_tested: int
    violations: list[Violation] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.passed:
            return f"{self.condition}: no violation found in {self.instances_tested} samples"
        return (f"{self.condition}: {len(self.violations)} violation(s) "
                f"in {self.instances_tested} samples")


# --- rank certification ------------------------------------------------------

def _min_singular_values(A: np.ndarray, subsets: np.ndarray) -> np.ndarray:
    out = np.empty(len(subsets))
    for start in range(0, len(subsets), 4096):
        chunk = subsets[start:start + 4096]
        s = np.linalg.svd(A[chunk], compute_uv=False)
        out[start:start + len(chunk)] = s[:, -1]
    return out


def certify_rank(A, k: int, l: int, mode: str = "auto", seed=0) -> RankCertificate:
    """Check that every ``m - (2l + 1)`` rows of ``A`` have rank ``k``.

    ``mode`` is ``"exhaustive"``, ``"sampled"`` (``10**4`` random subsets) or
    ``"auto"``. Exhaustive checking is mandatory when there are at most
    ``10**6`` subsets. A single absolute tolerance,
    ``eps * max(r, k) * sigma_max(A)``, is used for every subset; it bounds
    each subset's default relative tolerance from above.
    """
    A = as_matrix(A)
    m = A.shape[0]
    if A.shape[1] != k:
        raise InvalidInputError(f"A has {A.shape[1]} columns, expected k={k}")
    r = m - (2 * l + 1)
    if l < 0 or r < k:
        raise NoBudgetError(f"m - (2l + 1) = {r} < k = {k}")
    total = math.comb(m, r)
    if mode == "auto":
        mode = "exhaustive" if total <= EXHAUSTIVE_LIMIT else "sampled"
    if mode == "sampled" and total <= EXHAUSTIVE_LIMIT:
        raise InvalidInputError(f"only {total} subsets; exhaustive check is required")
    if mode == "exhaustive":
        subsets = np.array(list(itertools.combinations(range(m), r)), dtype=np.intp)
    elif mode == "sampled":
        rng = make_rng(seed)
        subsets = np.array([np.sort(rng.choice(m, size=r, replace=False))
                            for _ in range(SAMPLED_SUBSETS)], dtype=np.intp)
    else:
        raise InvalidInputError(f"unknown mode {mode!r}")
    sigma_max = float(np.linalg.norm(A, 2))
    tol = float(EPS * max(r, k) * sigma_max)
    smin = _min_singular_values(A, subsets)
    bad = np.flatnonzero(smin <= tol)
    witness = tuple(int(i) for i in subsets[bad[0]]) if bad.size else None
    label = "exhaustive" if mode == "exhaustive" else f"sampled({len(subsets)})"
    return RankCertificate(m, k, l, len(subsets), label, not bad.size,
                           float(smin.min()), tol, witness)


# --- candidates --------------------------------------------------------------

def generate_candidates(z0, count: int, seed, radii=(0.1, 1.0, 10.0)) -> list[np.ndarray]:
    """Probe points around ``z0``.

    Gaussian directions at each radius (a multiple of ``||z0||``), cycled,
    followed by signed coordinate perturbations of size ``1e-4 * ||z0||``.
    """
    z0 = as_vector(z0, "z0")
    rng = make_rng(seed)
    scale = max(float(np.linalg.norm(z0)), 1.0)
    out = []
    for i in range(count):
        d = rng.standard_normal(z0.shape[0])
        out.append(z0 + radii[i % len(radii)] * scale * d / np.linalg.norm(d))
    delta = 1e-4 * scale
    for j in range(z0.shape[0]):
        for sgn in (1.0, -1.0):
            z = z0.copy()
            z[j] += sgn * delta
            out.append(z)
    return out


def _measured_differences(net, M, z0, candidates):
    M = as_matrix(M, "M")
    z0 = as_vector(z0, "z0")
    base = M @ forward(net, z0)
    keep = [np.asarray(z, dtype=np.float64) for z in candidates
            if not np.array_equal(np.asarray(z, dtype=np.float64), z0)]
    diffs = [M @ forward(net, z) - base for z in keep]
    return base, keep, diffs


# --- recovery conditions -----------------------------------------------------

def check_l0_condition(net: GeneratorNet, M, z0, l: int, candidates,
                       rel_tol: float = ZERO_REL_TOL) -> ConditionReport:
    """Every candidate must give at least ``2l + 1`` nonzeros in ``M G(z) - M G(z0)``.

    Entries with magnitude <= ``rel_tol * ||M G(z0)||_inf`` count as zero.
    """
    base, keep, diffs = _measured_differences(net, M, z0, candidates)
    thresh = rel_tol * float(np.max(np.abs(base)))
    report = ConditionReport("l0_separation", len(keep),
                             notes={"zero_threshold": thresh, "l": l})
    for z, d in zip(keep, diffs):
        nnz = int(np.count_nonzero(np.abs(d) > thresh))
        if nnz <= 2 * l:
            report.violations.append(Violation({"z": z.tolist()}, {"nonzeros": nnz}))
    return report


def check_l1_condition(net: GeneratorNet, M, z0, support, candidates) -> ConditionReport:
    """Strict inequality ``||d_K||_1 < ||d_{not K}||_1`` for ``d = M G(z0) - M G(z)``."""
    base, keep, diffs = _measured_differences(net, M, z0, candidates)
    m = base.shape[0]
    K = np.zeros(m, dtype=bool)
    idx = list(support)
    if any(i < 0 or i >= m for i in idx):
        raise InvalidInputError(f"support indices must lie in [0, {m})")
    K[idx] = True
    report = ConditionReport("l1_support_inequality", len(keep), notes={"support": idx})
    for z, d in zip(keep, diffs):
        on, off = float(np.abs(d[K]).sum()), float(np.abs(d[~K]).sum())
        if not on < off:
            report.violations.append(Violation({"z": z.tolist()}, {"on_support": on,
                                                                   "off_support": off}))
    return report


def leaky_beta(x, y, h: float) -> np.ndarray:
    """Slope ``beta`` with ``a(x) - a(y) = beta (x - y)`` for leaky ReLU ``a``.

    Same-sign pairs get the exact slope (1 or ``h``); ``x == y`` gives 1.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    px, py = x >= 0, y >= 0
    ax = np.where(px, x, h * x)
    ay = np.where(py, y, h * y)
    with np.errstate(invalid="ignore", divide="ignore"):
        mixed = (ax - ay) / (x - y)
    beta = np.where(px & py, 1.0, np.where(~px & ~py, h, mixed))
    return np.where(x == y, 1.0, beta)


def check_beta_lemma(h: float, samples) -> ConditionReport:
    """Check ``h <= beta <= 1`` for every pair with ``x != y``.

    Mixed-sign slopes come from a rounded division, so bounds are checked to
    4 ulp.
    """
    if not 0.0 < h < 1.0:
        raise InvalidInputError(f"h must lie in (0, 1), got {h}")
    samples = np.asarray(samples, dtype=np.float64).reshape(-1, 2)
    x, y = samples[:, 0], samples[:, 1]
    keep = x != y
    x, y = x[keep], y[keep]
    beta = leaky_beta(x, y, h)
    slack = 4 * EPS
    bad = np.flatnonzero((beta < h * (1 - slack)) | (beta > 1 + slack))
    report = ConditionReport("beta_bounds", int(x.size), notes={
        "h": h,
        "hits_beta_1": int(np.count_nonzero(beta == 1.0)),
        "hits_beta_h": int(np.count_nonzero(beta == h)),
        "beta_min": float(beta.min()) if beta.size else float("nan"),
        "beta_max": float(beta.max()) if beta.size else float("nan"),
    })
    for i in bad:
        report.violations.append(Violation({"x": float(x[i]), "y": float(y[i])},
                                           {"beta": float(beta[i])}))
    return report


# --- l0 brute force ----------------------------------------------------------

def l0_objectives(net: GeneratorNet, M, y, grid, rel_tol: float = ZERO_REL_TOL) -> np.ndarray:
    """``||M G(z) - y||_0`` for each grid point; zero means <= ``rel_tol * max(||y||_inf, 1)``."""
    M = as_matrix(M, "M")
    y = as_vector(y, "y")
    thresh = rel_tol * max(float(np.max(np.abs(y))), 1.0)
    return np.array([np.count_nonzero(np.abs(M @ forward(net, z) - y) > thresh)
                     for z in grid])


def brute_force_l0_recovery(net: GeneratorNet, M, y, grid) -> np.ndarray:
    """Grid point minimizing the l0 residual.

    Ties go to the smallest ``||z||_2``, then to the lowest index.
    """
    grid = [as_vector(z, "grid point") for z in grid]
    if not grid:
        raise InvalidInputError("grid is empty")
    obj = l0_objectives(net, M, y, grid)
    norms = np.array([np.linalg.norm(z) for z in grid])
    order = np.lexsort((np.arange(len(grid)), norms, obj))
    return grid[order[0]].copy()


def adversarial_outliers(net: GeneratorNet, M, z0, l: int, seed):
    """Outliers that make some ``z != z0`` at least as good as ``z0`` in l0.

    Picks ``m - 2l`` rows (needs ``m - 2l < k``), moves ``z0`` along a null
    direction of the linearized map on those rows, then copies ``l`` of the
    resulting differences into ``e``. Exact for identity nets.
    Returns ``(e, z_alt)``.
    """
    M = as_matrix(M, "M")
    z0 = as_vector(z0, "z0")
    m, k = M.shape[0], net.input_dim
    zero_rows = m - 2 * l
    if zero_rows >= k or zero_rows < 0:
        raise InvalidInputError(f"need 0 <= m - 2l < k, got m={m}, l={l}, k={k}")
    rng = make_rng(seed)
    rows = np.sort(rng.choice(m, size=zero_rows, replace=False))
    A = M @ jacobian(net, z0)
    if zero_rows:
        _, _, Vt = np.linalg.svd(A[rows])
        v = Vt[-1]
    else:
        v = rng.standard_normal(k)
    z_alt = z0 + v / np.linalg.norm(v) * max(float(np.linalg.norm(z0)), 1.0)
    d = M @ forward(net, z_alt) - M @ forward(net, z0)
    rest = np.setdiff1d(np.arange(m), rows)
    chosen = np.sort(rng.choice(rest, size=l, replace=False))
    e = np.zeros(m)
    e[chosen] = d[chosen]
    return e, z_alt


# --- leaky-ReLU reduction ----------------------------------------------------

def scaled_layer_product(net: GeneratorNet, z, z0) -> np.ndarray:
    """Matrix ``P`` with ``G(z) - G(z0) = P (z - z0)``.

    ``P = Gamma_d W_d ... Gamma_1 W_1`` where ``Gamma_i`` holds the per-unit
    secant slopes of the activation between the two pre-activations.
    """
    _, pre = forward_with_preactivations(net, z)
    _, pre0 = forward_with_preactivations(net, z0)
    P = np.eye(net.input_dim)
    for layer, u, u0 in zip(net.layers, pre, pre0):
        act = layer.activation
        with np.errstate(invalid="ignore", divide="ignore"):
            slope = (act(u) - act(u0)) / (u - u0)
        slope = np.where(u == u0, 1.0, slope)
        if act.kind == "leaky_relu":
            slope = np.where(u == u0, 1.0, leaky_beta(u, u0, act.leak))
        P = slope[:, None] * (layer.weight @ P)
    return P


def relu_rank_deficiency_exhibit(net: GeneratorNet, M, seed, tries: int = 10000):
    """Search for ``(z, z0)`` where ``M P(z, z0)`` loses rank.

    Zero slopes in ReLU units can wipe out rows of the scaled matrices.
    Returns ``(z, z0, rank)`` or ``None``.
    """
    M = as_matrix(M, "M")
    rng = make_rng(seed)
    k = net.input_dim
    for _ in range(tries):
        z, z0 = rng.standard_normal(k), rng.standard_normal(k)
        rank = numerical_rank(M @ scaled_layer_product(net, z, z0)).rank
        if rank < k:
            return z, z0, rank
    return None


# --- report serialization ----------------------------------------------------

def report_rows(items) -> list[dict]:
    rows = []
    for name, item in items:
        if isinstance(item, RankCertificate):
            rows.append({"check": name, "condition": "rank",
                         "instances": item.submatrices_checked,
                         "violations": 0 if item.all_full_rank else 1,
                         "passed": item.all_full_rank,
                         "detail": f"mode={item.mode} min_sv={item.min_singular_value_seen!r}"
                                   f" tol={item.tolerance!r}"})
        else:
            detail = " ".join(f"{k}={v}" for k, v in item.notes.items()
                              if not isinstance(v, (list, dict)))
            rows.append({"check": name, "condition": item.condition,
                         "instances": item.instances_tested,
                         "violations": len(item.violations),
                         "passed": item.passed, "detail": detail})
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["check", "condition", "instances",
                                             "violations", "passed", "detail"],
                            lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
