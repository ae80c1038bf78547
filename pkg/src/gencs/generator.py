"""Fully connected generator networks ``G: R^k -> R^n``.

A network is a chain of affine layers, each followed by the same
element-wise activation (identity, ReLU or leaky ReLU). The activation is
applied after the last affine stage as well.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, ShapeError, UnsupportedOperationError
from .numerics import as_vector, make_rng

ACTIVATION_KINDS = ("identity", "relu", "leaky_relu")
DEFAULT_LEAK = 0.2


@dataclass(frozen=True)
class Activation:
    kind: str = "identity"
    leak: float | None = None

    def __post_init__(self):
        if self.kind not in ACTIVATION_KINDS:
            raise InvalidInputError(f"unknown activation {self.kind!r}")
        if self.kind == "leaky_relu":
            if self.leak is None:
                object.__setattr__(self, "leak", DEFAULT_LEAK)
            if not 0.0 < self.leak < 1.0:
                raise InvalidInputError(f"leak must lie in (0, 1), got {self.leak}")
        elif self.leak is not None:
            raise InvalidInputError(f"{self.kind} takes no leak parameter")

    def __call__(self, u: np.ndarray) -> np.ndarray:
        if self.kind == "identity":
            return u
        if self.kind == "relu":
            return np.where(u >= 0, u, 0.0)
        return np.where(u >= 0, u, self.leak * u)

    def derivative(self, u: np.ndarray) -> np.ndarray:
        # right derivative at 0
        if self.kind == "identity":
            return np.ones_like(u)
        low = 0.0 if self.kind == "relu" else self.leak
        return np.where(u >= 0, 1.0, low)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: Activation

    def __post_init__(self):
        w = _frozen(self.weight)
        b = _frozen(self.bias)
        if w.ndim != 2 or b.ndim != 1:
            raise ShapeError("weight must be 2-D and bias 1-D")
        if b.shape[0] != w.shape[0]:
            raise ShapeError(f"bias length {b.shape[0]} != weight rows {w.shape[0]}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise InvalidInputError("layer parameters must be finite")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True, eq=False)
class GeneratorNet:
    layers: tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise InvalidInputError("a generator needs at least one layer")
        for i in range(1, len(layers)):
            prev, cur = layers[i - 1].weight, layers[i].weight
            if cur.shape[1] != prev.shape[0]:
                raise ShapeError(
                    f"layer {i + 1}: expects {cur.shape[1]} inputs but layer {i} "
                    f"produces {prev.shape[0]}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    @property
    def dims(self) -> list[int]:
        return [self.input_dim] + [layer.weight.shape[0] for layer in self.layers]

    @property
    def activation(self) -> Activation:
        """The shared activation; raises if layers disagree."""
        acts = {layer.activation for layer in self.layers}
        if len(acts) != 1:
            raise UnsupportedOperationError("network mixes activations")
        return acts.pop()

    @property
    def is_uniform(self) -> bool:
        return len({layer.activation for layer in self.layers}) == 1

    def check_theory_dims(self) -> None:
        """Hidden widths >= k and output n > k, with one shared activation."""
        k = self.input_dim
        if not self.is_uniform:
            raise UnsupportedOperationError("theory checks need a uniform activation")
        for i, width in enumerate(self.dims[1:-1], start=1):
            if width < k:
                raise ShapeError(f"hidden layer {i} has width {width} < k={k}")
        if self.output_dim <= k:
            raise ShapeError(f"output dim {self.output_dim} must exceed k={k}")

    def __call__(self, z) -> np.ndarray:
        return forward(self, z)


def _check_input(net: GeneratorNet, z) -> np.ndarray:
    z = as_vector(z, "z")
    if z.shape[0] != net.input_dim:
        raise ShapeError(f"z has length {z.shape[0]}, network expects {net.input_dim}")
    return z


def forward(net: GeneratorNet, z) -> np.ndarray:
    h = _check_input(net, z)
    for layer in net.layers:
        h = layer.activation(layer.weight @ h + layer.bias)
    return h


def forward_with_preactivations(net: GeneratorNet, z) -> tuple[np.ndarray, list[np.ndarray]]:
    h = _check_input(net, z)
    pre = []
    for layer in net.layers:
        u = layer.weight @ h + layer.bias
        pre.append(u)
        h = layer.activation(u)
    return h, pre


def jacobian(net: GeneratorNet, z) -> np.ndarray:
    """``dG/dz`` as an ``n x k`` matrix, by the chain rule."""
    _, pre = forward_with_preactivations(net, z)
    J = np.eye(net.input_dim)
    for layer, u in zip(net.layers, pre):
        J = layer.activation.derivative(u)[:, None] * (layer.weight @ J)
    return J


def init_gaussian(dims, activation: Activation | None = None, seed=0,
                  gaussian_bias: bool = False) -> GeneratorNet:
    """Random net with i.i.d. N(0, 1) weights.

    ``dims`` is ``[k, n_1, ..., n]``. Biases are zero unless ``gaussian_bias``.
    """
    dims = [int(d) for d in dims]
    if len(dims) < 2:
        raise InvalidInputError(f"dims needs at least two entries, got {dims}")
    if any(d < 1 for d in dims):
        raise InvalidInputError(f"all dims must be >= 1, got {dims}")
    activation = activation or Activation()
    rng = make_rng(seed)
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w = rng.standard_normal((fan_out, fan_in))
        b = rng.standard_normal(fan_out) if gaussian_bias else np.zeros(fan_out)
        layers.append(Layer(w, b, activation))
    return GeneratorNet(tuple(layers))


def composite_weight(net: GeneratorNet) -> np.ndarray:
    """Product ``W_d ... W_1`` of an identity-activation net (biases dropped)."""
    if any(layer.activation.kind != "identity" for layer in net.layers):
        raise UnsupportedOperationError("composite weight is only defined for identity nets")
    W = net.layers[0].weight
    for layer in net.layers[1:]:
        W = layer.weight @ W
    return np.array(W)


# --- GENREC text format ----------------------------------------------------

def fmt(v: float) -> str:
    return repr(float(v))


def dumps(net: GeneratorNet) -> str:
    act = net.activation
    leak = act.leak if act.kind == "leaky_relu" else 0.0
    lines = [f"GENREC v1 d={len(net.layers)} act={act.kind} h={fmt(leak)}"]
    for i, layer in enumerate(net.layers, start=1):
        rows, cols = layer.weight.shape
        lines.append(f"layer {i} {rows} {cols}")
        lines.extend(" ".join(fmt(v) for v in row) for row in layer.weight)
        lines.append(" ".join(fmt(v) for v in layer.bias))
    return "\n".join(lines) + "\n"


def loads(text: str) -> GeneratorNet:
    tokens = text.split()
    if tokens[:2] != ["GENREC", "v1"]:
        raise InvalidInputError("not a GENREC v1 file")
    try:
        header = dict(t.split("=", 1) for t in tokens[2:5])
        depth = int(header["d"])
        kind = header["act"]
        leak = float(header["h"])
    except (KeyError, ValueError) as exc:
        raise InvalidInputError(f"bad GENREC header: {exc}") from None
    act = Activation(kind, leak if kind == "leaky_relu" else None)
    pos = 5
    layers = []
    prev_rows = None
    for i in range(1, depth + 1):
        try:
            tag, idx, rows, cols = tokens[pos:pos + 4]
            idx, rows, cols = int(idx), int(rows), int(cols)
        except ValueError:
            raise InvalidInputError(f"layer {i}: malformed layer line") from None
        if tag != "layer" or idx != i:
            raise InvalidInputError(f"layer {i}: expected 'layer {i}' record")
        if prev_rows is not None and cols != prev_rows:
            raise ShapeError(
                f"layer {i}: has {cols} columns but layer {i - 1} has {prev_rows} rows"
            )
        pos += 4
        count = rows * cols + rows
        vals = tokens[pos:pos + count]
        if len(vals) != count:
            raise InvalidInputError(f"layer {i}: truncated values")
        arr = np.array([float(v) for v in vals])
        pos += count
        layers.append(Layer(arr[:rows * cols].reshape(rows, cols), arr[rows * cols:], act))
        prev_rows = rows
    if pos != len(tokens):
        raise InvalidInputError("trailing data after last layer")
    return GeneratorNet(tuple(layers))


def save(net: GeneratorNet, path) -> None:
    Path(path).write_text(dumps(net))


def load(path) -> GeneratorNet:
    return loads(Path(path).read_text())
