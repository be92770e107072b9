import json

import numpy as np
import pytest

from fraudkit.errors import ConfigError, ModelError
from fraudkit.neural import (
    ACTIVATIONS,
    LayerSpec,
    Network,
    NetworkSpec,
    TrainConfig,
    gradient_check,
    init_network,
    layer_stack,
    train,
)


def linear_spec(in_dim=1, out_dim=1, loss="mse"):
    return NetworkSpec(in_dim, (LayerSpec(out_dim, "linear"),), loss)


# ---------------------------------------------------------------- spec


def test_spec_requires_layers():
    with pytest.raises(ConfigError):
        NetworkSpec(2, (), "mse")


def test_bce_requires_logistic_head():
    with pytest.raises(ConfigError):
        NetworkSpec(2, (LayerSpec(1, "linear"),), "binary_cross_entropy")


# ---------------------------------------------------------------- init


def test_init_shapes():
    net = init_network(linear_spec(2, 1), seed=0)
    assert net.weights[0].shape == (1, 2)
    assert net.biases[0].shape == (1,)
    assert np.all(net.biases[0] == 0.0)


def test_init_deterministic_per_seed():
    a = init_network(linear_spec(3, 2), seed=9)
    b = init_network(linear_spec(3, 2), seed=9)
    assert np.array_equal(a.weights[0], b.weights[0])


def test_init_differs_across_seeds():
    a = init_network(linear_spec(3, 2), seed=9)
    b = init_network(linear_spec(3, 2), seed=10)
    assert not np.array_equal(a.weights[0], b.weights[0])


def test_init_glorot_bounds():
    spec = NetworkSpec(4, (LayerSpec(6, "tanh"),), "mse")
    net = init_network(spec, seed=1)
    limit = np.sqrt(6.0 / (4 + 6))
    assert np.all(np.abs(net.weights[0]) <= limit)


# ---------------------------------------------------------------- forward


def test_forward_zero_weights_logistic_gives_half():
    spec = NetworkSpec(3, (LayerSpec(2, "logistic"),), "binary_cross_entropy")
    net = Network(spec, [np.zeros((2, 3))], [np.zeros(2)])
    out = net.forward(np.ones((4, 3)))
    assert np.all(out == 0.5)


def test_forward_affine_arithmetic():
    spec = linear_spec()
    net = Network(spec, [np.array([[2.0]])], [np.array([1.0])])
    assert net.forward(np.array([[3.0]]))[0, 0] == 7.0


def test_forward_relu():
    spec = NetworkSpec(2, (LayerSpec(2, "relu"),), "mse")
    net = Network(spec, [np.eye(2)], [np.zeros(2)])
    out = net.forward(np.array([[-1.0, 2.0]]))
    assert out.tolist() == [[0.0, 2.0]]


def test_forward_dimension_mismatch():
    net = init_network(linear_spec(3, 1), seed=0)
    with pytest.raises(ModelError):
        net.forward(np.ones((2, 4)))


def test_logistic_outputs_in_open_unit_interval():
    spec = NetworkSpec(2, (LayerSpec(1, "logistic"),), "binary_cross_entropy")
    net = Network(spec, [np.array([[50.0, -50.0]])], [np.array([0.0])])
    out = net.forward(np.array([[10.0, -10.0], [-10.0, 10.0]]))
    assert np.all((out > 0.0) & (out < 1.0))


# ---------------------------------------------------------------- gradients


def _random_net(hidden_act: str, loss: str, seed: int) -> tuple[Network, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    if loss == "binary_cross_entropy":
        head = "logistic"
    elif loss == "wasserstein_critic":
        head = "linear"
    else:
        head = hidden_act
    spec = NetworkSpec(
        4,
        layer_stack([6, 5, 1], [hidden_act, hidden_act, head]),
        loss,
    )
    net = init_network(spec, seed)
    x = rng.uniform(-1, 1, size=(7, 4))
    if loss == "binary_cross_entropy":
        t = rng.integers(0, 2, size=(7, 1)).astype(float)
    elif loss == "wasserstein_critic":
        t = rng.choice([-1.0, 1.0], size=(7, 1))
    else:
        t = rng.uniform(-1, 1, size=(7, 1))
    return net, x, t


def _kink_free(net, x, margin=1e-3) -> bool:
    """Reject draws whose relu/leaky pre-activations sit on the kink, where
    central differences are legitimately off."""
    _, cache = net.forward_cached(x)
    for layer, (_, z, _) in zip(net.spec.layers, cache):
        if layer.activation in ("relu", "leaky_relu") and np.abs(z).min() < margin:
            return False
    return True


def draw_checkable_net(activation, loss, seed):
    for offset in range(50):
        net, x, t = _random_net(activation, loss, seed + 100 * offset)
        if _kink_free(net, x):
            return net, x, t
    raise AssertionError("could not draw a kink-free network")


@pytest.mark.parametrize("activation", ACTIVATIONS)
@pytest.mark.parametrize("loss", ["mse", "binary_cross_entropy", "wasserstein_critic"])
def test_gradient_check_all_pairs(activation, loss):
    for seed in (11, 12):
        net, x, t = draw_checkable_net(activation, loss, seed)
        assert gradient_check(net, x, t) <= 1e-4


# ---------------------------------------------------------------- training


def test_train_recovers_line():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, size=(20, 1))
    y = 2.0 * x + 1.0
    net = init_network(linear_spec(), seed=3)
    cfg = TrainConfig(optimizer="sgd", learning_rate=0.2, epochs=500, batch_size=64, seed=0)
    result = train(net, x, y, cfg)
    # closed-form least squares on this noiseless fixture is exactly (2, 1)
    assert abs(net.weights[0][0, 0] - 2.0) < 0.05
    assert abs(net.biases[0][0] - 1.0) < 0.05
    assert len(result.loss_history) == 500


def test_train_zero_learning_rate_is_noop():
    net = init_network(linear_spec(2, 1), seed=5)
    before = [w.copy() for w in net.weights]
    cfg = TrainConfig(optimizer="sgd", learning_rate=0.0, epochs=10, batch_size=4, seed=0)
    result = train(net, np.ones((6, 2)), np.ones((6, 1)), cfg)
    assert all(np.array_equal(a, b) for a, b in zip(before, net.weights))
    assert len(set(round(v, 12) for v in result.loss_history)) == 1


def test_train_separable_blobs_reach_full_accuracy():
    rng = np.random.default_rng(1)
    a = rng.normal((-2, -2), 0.3, size=(30, 2))
    b = rng.normal((2, 2), 0.3, size=(30, 2))
    x = np.vstack([a, b])
    y = np.array([0.0] * 30 + [1.0] * 30)
    spec = NetworkSpec(2, (LayerSpec(1, "logistic"),), "binary_cross_entropy")
    net = init_network(spec, seed=2)
    cfg = TrainConfig(optimizer="adam", learning_rate=0.05, epochs=300, batch_size=64, seed=0)
    train(net, x, y, cfg)
    preds = (net.forward(x).ravel() >= 0.5).astype(float)
    assert np.mean(preds == y) == 1.0


def test_train_loss_decreases_on_convex_problem():
    rng = np.random.default_rng(4)
    x = rng.uniform(-1, 1, size=(50, 3))
    y = x @ np.array([[1.0], [-2.0], [0.5]]) + 0.3
    net = init_network(linear_spec(3, 1), seed=0)
    cfg = TrainConfig(optimizer="sgd", learning_rate=0.05, epochs=50, batch_size=64, seed=0)
    result = train(net, x, y, cfg)
    assert result.loss_history[-1] <= result.loss_history[0]


def test_weight_clip_enforced_exactly():
    net = init_network(NetworkSpec(2, (LayerSpec(3, "tanh"), LayerSpec(1, "linear")), "mse"), seed=7)
    cfg = TrainConfig(
        optimizer="adam", learning_rate=0.1, epochs=5, batch_size=64, seed=0, weight_clip=0.02
    )
    train(net, np.ones((8, 2)), np.zeros((8, 1)), cfg)
    assert max(np.abs(w).max() for w in net.weights) <= 0.02


def test_train_mismatched_rows_raises():
    net = init_network(linear_spec(2, 1), seed=0)
    with pytest.raises(ModelError):
        train(net, np.ones((3, 2)), np.ones((4, 1)), TrainConfig(epochs=1))


def test_train_divergence_aborts():
    net = init_network(linear_spec(1, 1), seed=0)
    cfg = TrainConfig(optimizer="sgd", learning_rate=1e12, epochs=50, batch_size=64, seed=0)
    with pytest.raises(ModelError, match="non-finite"):
        train(net, np.full((4, 1), 10.0), np.zeros((4, 1)), cfg)


# ---------------------------------------------------------------- persistence


def test_network_json_round_trip(tmp_path):
    spec = NetworkSpec(3, layer_stack([4, 1], ["leaky_relu", "logistic"]), "binary_cross_entropy")
    net = init_network(spec, seed=21)
    path = tmp_path / "net.json"
    net.save(path)
    back = Network.load(path)
    x = np.random.default_rng(0).uniform(size=(5, 3))
    assert np.array_equal(net.forward(x), back.forward(x))
    doc = json.loads(path.read_text())
    assert doc["format"] == "fraudkit.network/1"
