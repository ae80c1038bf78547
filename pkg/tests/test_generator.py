import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gencs.errors import InvalidInputError, ShapeError, UnsupportedOperationError
from gencs.generator import (Activation, GeneratorNet, Layer, composite_weight, dumps, forward,
                             init_gaussian, jacobian, load, loads, save)
from gencs.numerics import numerical_rank

IDENT = Activation()
LEAKY = Activation("leaky_relu", 0.3)


def net_from(weights, act=IDENT):
    return GeneratorNet(tuple(Layer(w, np.zeros(len(w)), act) for w in weights))


def test_forward_examples():
    assert forward(net_from([np.eye(2)]), [3.0, -2.0]).tolist() == [3.0, -2.0]
    leaky = net_from([np.array([[1.0], [-1.0]])], Activation("leaky_relu", 0.5))
    assert forward(leaky, [2.0]).tolist() == [2.0, -1.0]
    two = net_from([np.eye(2), np.array([[1.0, 1.0]])])
    assert forward(two, [1.0, 2.0]).tolist() == [3.0]


def test_forward_shape_error():
    with pytest.raises(ShapeError):
        forward(net_from([np.eye(2)]), [1.0, 2.0, 3.0])


def test_activation_validation():
    with pytest.raises(InvalidInputError):
        Activation("leaky_relu", 0.0)
    with pytest.raises(InvalidInputError):
        Activation("leaky_relu", 1.0)
    with pytest.raises(InvalidInputError):
        Activation("relu", 0.5)
    assert Activation("leaky_relu").leak == 0.2


def test_activation_applied_after_last_layer():
    net = net_from([np.array([[-1.0]])], Activation("relu"))
    assert forward(net, [1.0]).tolist() == [0.0]


def test_dimension_chain_enforced():
    with pytest.raises(ShapeError, match="layer 2"):
        net_from([np.ones((3, 2)), np.ones((4, 2))])
    with pytest.raises(ShapeError):
        Layer(np.ones((3, 2)), np.zeros(2), IDENT)


def test_jacobian_identity_net_is_composite():
    net = init_gaussian([3, 6, 8], seed=4)
    W = composite_weight(net)
    rng = np.random.default_rng(0)
    for _ in range(3):
        np.testing.assert_allclose(jacobian(net, rng.standard_normal(3)), W, rtol=1e-12)


def central_fd(net, z, step=1e-6):
    cols = []
    for j in range(len(z)):
        dz = np.zeros_like(z)
        dz[j] = step
        cols.append((forward(net, z + dz) - forward(net, z - dz)) / (2 * step))
    return np.column_stack(cols)


def away_from_kinks(net, z, margin=1e-3):
    from gencs.generator import forward_with_preactivations
    _, pre = forward_with_preactivations(net, z)
    return all(np.min(np.abs(u)) > margin for u in pre)


@pytest.mark.parametrize("act", [IDENT, LEAKY, Activation("relu")])
def test_jacobian_matches_finite_differences(act):
    rng = np.random.default_rng(1)
    checked = 0
    while checked < 20:
        net = init_gaussian([3, 7, 9], act, rng, gaussian_bias=True)
        z = rng.standard_normal(3)
        if not away_from_kinks(net, z):
            continue
        J, F = jacobian(net, z), central_fd(net, z)
        err = np.max(np.abs(J - F)) / max(np.max(np.abs(J)), 1e-12)
        assert err <= 1e-5
        checked += 1


def test_relu_dead_unit_zeroes_jacobian_row():
    w = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])
    net = net_from([w], Activation("relu"))
    J = jacobian(net, [1.0, 1.0])  # third pre-activation is -2
    assert np.all(J[2] == 0.0)
    np.testing.assert_array_equal(J[:2], np.eye(2))


def test_relu_derivative_at_zero_is_one():
    net = net_from([np.array([[1.0]])], Activation("relu"))
    assert jacobian(net, [0.0])[0, 0] == 1.0


def test_init_gaussian_determinism_and_validation():
    a, b = init_gaussian([2, 5, 10], seed=9), init_gaussian([2, 5, 10], seed=9)
    for la, lb in zip(a.layers, b.layers):
        np.testing.assert_array_equal(la.weight, lb.weight)
        assert not la.bias.any()
    with pytest.raises(InvalidInputError):
        init_gaussian([3])


def test_composite_rank():
    net = init_gaussian([5, 20, 40], seed=2)
    assert numerical_rank(composite_weight(net)).rank == 5


def test_composite_weight_examples():
    w = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    np.testing.assert_array_equal(composite_weight(net_from([w])), w)
    np.testing.assert_array_equal(composite_weight(net_from([np.eye(2), 2 * np.eye(2)])),
                                  2 * np.eye(2))
    with pytest.raises(UnsupportedOperationError):
        composite_weight(net_from([np.eye(2)], LEAKY))


def test_composite_weight_ignores_biases():
    net = init_gaussian([3, 4, 5, 6], seed=3, gaussian_bias=True)
    W = composite_weight(net)
    z = np.random.default_rng(5).standard_normal(3)
    np.testing.assert_allclose(forward(net, z) - forward(net, np.zeros(3)), W @ z,
                               rtol=1e-12, atol=1e-12)


@given(st.floats(-5, 5), st.integers(0, 2**31))
def test_identity_net_linearity(alpha, seed):
    rng = np.random.default_rng(seed)
    net = init_gaussian([3, 5, 7], seed=rng, gaussian_bias=True)
    z1, z2 = rng.standard_normal(3), rng.standard_normal(3)
    lhs = forward(net, alpha * z1 + z2) - forward(net, z2)
    rhs = alpha * (forward(net, z1) - forward(net, np.zeros(3)))
    scale = max(np.linalg.norm(rhs), np.linalg.norm(forward(net, z2)), 1.0)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * scale * 10


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0.01, 0.99))
def test_leaky_difference_slope_bounds(x, y, h):
    act = Activation("leaky_relu", h)
    ax, ay = act(np.array([x, y]))
    if x == y:
        return
    beta = (ax - ay) / (x - y)
    assert h * (1 - 1e-12) <= beta <= 1 + 1e-12


@pytest.mark.parametrize("act", [IDENT, LEAKY, Activation("relu")])
def test_file_round_trip(tmp_path, act):
    net = init_gaussian([2, 5, 10], act, seed=7, gaussian_bias=True)
    path = tmp_path / "w.gen"
    save(net, path)
    back = load(path)
    assert dumps(back) == path.read_text()
    z = np.random.default_rng(0).standard_normal(2)
    np.testing.assert_array_equal(forward(back, z), forward(net, z))
    header = path.read_text().splitlines()[0]
    assert header.startswith(f"GENREC v1 d=2 act={act.kind} h=")


def test_loader_names_broken_layer():
    net = init_gaussian([2, 5, 10], seed=7)
    text = dumps(net).replace("layer 2 10 5", "layer 2 10 4")
    with pytest.raises((ShapeError, InvalidInputError), match="layer 2"):
        loads(text)


def test_loader_rejects_garbage():
    with pytest.raises(InvalidInputError):
        loads("hello world")
