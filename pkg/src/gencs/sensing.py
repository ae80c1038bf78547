"""Corrupted compressed measurements ``y = M x + e + eta``.

``e`` is a sparse outlier vector with large entries, ``eta`` dense small
noise. Ground truth is kept on the :class:`Observation` so solvers can be
scored afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, NoBudgetError, ShapeError
from .generator import GeneratorNet, fmt, forward
from .numerics import as_matrix, as_vector, make_rng

SIGN_MODES = ("positive", "random_sign")


@dataclass(frozen=True)
class OutlierSpec:
    count: int = 0
    lo: float = 5000.0
    hi: float = 10000.0
    sign_mode: str = "positive"

    def __post_init__(self):
        if self.count < 0:
            raise InvalidInputError(f"outlier count must be >= 0, got {self.count}")
        if not self.lo <= self.hi:
            raise InvalidInputError(f"need lo <= hi, got [{self.lo}, {self.hi}]")
        if self.sign_mode not in SIGN_MODES:
            raise InvalidInputError(f"unknown sign_mode {self.sign_mode!r}")


@dataclass(frozen=True, eq=False)
class SensingModel:
    M: np.ndarray
    noise_rms: float = 0.0
    outliers: OutlierSpec = field(default_factory=OutlierSpec)

    def __post_init__(self):
        object.__setattr__(self, "M", as_matrix(self.M, "M"))
        if not (np.isfinite(self.noise_rms) and self.noise_rms >= 0):
            raise InvalidInputError(f"noise_rms must be finite and >= 0, got {self.noise_rms}")

    @property
    def m(self) -> int:
        return self.M.shape[0]


@dataclass(frozen=True, eq=False)
class Observation:
    M: np.ndarray
    y: np.ndarray
    x0: np.ndarray
    z0: np.ndarray
    e: np.ndarray
    eta: np.ndarray
    support: tuple[int, ...]

    @property
    def m(self) -> int:
        return self.y.shape[0]


def make_outliers(m: int, spec: OutlierSpec, seed) -> tuple[np.ndarray, tuple[int, ...]]:
    """Draw an ``spec.count``-sparse outlier vector of length ``m``.

    Support is uniform without replacement; magnitudes uniform on
    ``[lo, hi]``. The returned support is sorted.
    """
    if spec.count > m:
        raise InvalidInputError(f"cannot place {spec.count} outliers in {m} entries")
    rng = make_rng(seed)
    support = np.sort(rng.choice(m, size=spec.count, replace=False))
    values = rng.uniform(spec.lo, spec.hi, size=spec.count)
    if spec.sign_mode == "random_sign":
        values *= rng.choice([-1.0, 1.0], size=spec.count)
    e = np.zeros(m)
    e[support] = values
    return e, tuple(int(i) for i in support)


def observe(net: GeneratorNet, model: SensingModel, z0, seed) -> Observation:
    """Synthesize one observation.

    Noise entries are N(0, noise_rms**2 / m), so ``sqrt(E||eta||^2)`` equals
    ``noise_rms``. Outliers are drawn first, then noise, from the same stream.
    """
    z0 = as_vector(z0, "z0")
    if model.M.shape[1] != net.output_dim:
        raise ShapeError(f"M has {model.M.shape[1]} columns, generator outputs {net.output_dim}")
    rng = make_rng(seed)
    x0 = forward(net, z0)
    m = model.m
    e, support = make_outliers(m, model.outliers, rng)
    if model.noise_rms > 0:
        eta = rng.normal(0.0, model.noise_rms / np.sqrt(m), size=m)
    else:
        eta = np.zeros(m)
    y = model.M @ x0 + e + eta
    return Observation(model.M, y, x0, z0, e, eta, support)


def outlier_budget(m_effective: int, k: int) -> int:
    """Largest outlier count with certified exact recovery: ``floor((m - 1 - k) / 2)``."""
    if m_effective <= k:
        raise NoBudgetError(f"need more rows than latent dims, got m={m_effective}, k={k}")
    return (m_effective - 1 - k) // 2


# --- text serialization ------------------------------------------------------

def _vec_block(name: str, v) -> list[str]:
    return [f"{name} {len(v)}", " ".join(fmt(x) for x in v)]


def dumps_observation(obs: Observation, extra: dict[str, np.ndarray] | None = None) -> str:
    """Self-describing text block; ``extra`` adds named vectors (e.g. solver outputs)."""
    m, n = obs.M.shape
    lines = [f"OBSERVATION v1 m={m} n={n} k={len(obs.z0)}", f"M {m} {n}"]
    lines.extend(" ".join(fmt(v) for v in row) for row in obs.M)
    for name in ("y", "x0", "z0", "e", "eta"):
        lines.extend(_vec_block(name, getattr(obs, name)))
    lines.append(f"support {len(obs.support)}")
    lines.append(" ".join(str(i) for i in obs.support))
    for name, v in (extra or {}).items():
        if " " in name:
            raise InvalidInputError(f"section name {name!r} contains whitespace")
        lines.extend(_vec_block(f"extra:{name}", v))
    return "\n".join(lines) + "\n"


def loads_observation(text: str) -> tuple[Observation, dict[str, np.ndarray]]:
    lines = text.splitlines()
    head = lines[0].split()
    if head[:2] != ["OBSERVATION", "v1"]:
        raise InvalidInputError("not an OBSERVATION v1 block")
    dims = dict(t.split("=", 1) for t in head[2:])
    m, n = int(dims["m"]), int(dims["n"])
    sections: dict[str, list[str]] = {}
    i = 1
    while i < len(lines):
        parts = lines[i].split()
        if not parts:
            i += 1
            continue
        name = parts[0]
        if name == "M":
            sections[name] = lines[i + 1:i + 1 + int(parts[1])]
            i += 1 + int(parts[1])
        else:
            sections[name] = [lines[i + 1]] if int(parts[1]) else [""]
            i += 2
    M = np.array([[float(v) for v in row.split()] for row in sections["M"]])
    if M.shape != (m, n):
        raise ShapeError(f"M block has shape {M.shape}, header says {(m, n)}")

    def vec(name):
        return np.array([float(v) for v in sections[name][0].split()])

    obs = Observation(
        M=M, y=vec("y"), x0=vec("x0"), z0=vec("z0"), e=vec("e"), eta=vec("eta"),
        support=tuple(int(v) for v in sections["support"][0].split()),
    )
    extra = {name[len("extra:"):]: vec(name) for name in sections if name.startswith("extra:")}
    return obs, extra


def save_observation(obs: Observation, path, extra=None) -> None:
    Path(path).write_text(dumps_observation(obs, extra))


def load_observation(path) -> tuple[Observation, dict[str, np.ndarray]]:
    return loads_observation(Path(path).read_text())
