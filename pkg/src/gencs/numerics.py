"""Small dense linear-algebra kernel.

Everything is float64. Matrices and vectors are plain numpy arrays; the
helpers here only validate and compute, they never keep state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

EPS = np.finfo(np.float64).eps


def as_matrix(A, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.size == 0:
        raise InvalidInputError(f"{name} must be a nonempty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return A


def as_vector(x, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return x


def make_rng(seed) -> np.random.Generator:
    """Return a Generator; an existing Generator is passed through unchanged."""
    if seed is None:
        raise InvalidInputError("an explicit seed or Generator is required")
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class RankResult:
    rank: int
    singular_values: np.ndarray
    tolerance_used: float


def _default_rel_tol(shape) -> float:
    return EPS * max(shape)


def pseudo_inverse(A, rel_tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via a thin SVD.

    Singular values at or below ``rel_tol * sigma_max`` are treated as zero.
    The default ``rel_tol`` is machine epsilon times the larger dimension.
    """
    A = as_matrix(A)
    if rel_tol is None:
        rel_tol = _default_rel_tol(A.shape)
    if not rel_tol > 0:
        raise InvalidInputError("rel_tol must be positive")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((A.shape[1], A.shape[0]))
    keep = s > rel_tol * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vt.T * inv) @ U.T


def numerical_rank(A, rel_tol: float | None = None) -> RankResult:
    """Count singular values strictly above ``rel_tol * sigma_max``."""
    A = as_matrix(A)
    if rel_tol is None:
        rel_tol = _default_rel_tol(A.shape)
    s = np.linalg.svd(A, compute_uv=False)
    tol = float(rel_tol * s[0]) if s.size else 0.0
    if s[0] == 0.0:
        return RankResult(0, s, tol)
    return RankResult(int(np.count_nonzero(s > tol)), s, tol)


def soft_threshold(x, theta: float) -> np.ndarray:
    """Element-wise shrinkage toward zero, the prox of ``theta * ||.||_1``."""
    if not theta >= 0:
        raise InvalidInputError(f"theta must be nonnegative, got {theta}")
    x = np.asarray(x, dtype=np.float64)
    if theta == 0:
        return x.copy()
    return np.where(x > theta, x - theta, np.where(x < -theta, x + theta, 0.0))


def gaussian_matrix(rows: int, cols: int, seed) -> np.ndarray:
    """i.i.d. standard normal ``rows x cols`` matrix drawn from ``seed``."""
    if rows < 1 or cols < 1:
        raise InvalidInputError(f"need rows, cols >= 1, got {rows}x{cols}")
    return make_rng(seed).standard_normal((rows, cols))
