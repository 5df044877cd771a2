import math

import numpy as np
import pytest

from pyHybridAct import (
    Activation,
    ActivationKind,
    ActivationParams,
    AdamState,
    ContractViolation,
    Dataset,
    DenseNetwork,
    Gradients,
    Init,
    LossKind,
    NetworkConfig,
    NumericError,
    OutputHead,
    Task,
    TrainConfig,
    TrainHistory,
    adam_step,
    epochs_to_convergence,
    evaluate,
    gradient_health,
    init_network,
    parse_activation,
    train,
)
from pyHybridAct.network import _validation_split

K = ActivationKind


def _config(input_dim, hidden, output_dim=1, kind=K.TANH, head=OutputHead.LINEAR_REGRESSION,
            init=Init.GLOROT_UNIFORM):
    return NetworkConfig(input_dim, tuple(hidden), output_dim,
                         Activation(kind, ActivationParams(k=10.0)), head, init)


def _separable(n=200, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    x0 = rng.uniform(0.5, 2.0, n) * (2 * labels - 1)
    x1 = rng.standard_normal(n)
    return Dataset(np.column_stack([x0, x1]), labels, Task.BINARY, "separable", 2)


class TestConfig:
    def test_arch_id(self):
        assert _config(4, (100, 100, 100)).arch_id == "100-3"
        assert _config(4, (64, 32, 16)).arch_id == "64-32-16"
        assert _config(4, (10,)).arch_id == "10-1"

    def test_head_fixes_loss(self):
        assert _config(4, (3,)).loss is LossKind.MSE
        assert _config(4, (3,), 3, head=OutputHead.SOFTMAX_MULTICLASS).loss is LossKind.CE

    @pytest.mark.parametrize(
        "args",
        [
            (4, (), 1, OutputHead.LINEAR_REGRESSION),
            (0, (3,), 1, OutputHead.LINEAR_REGRESSION),
            (4, (3, 0), 1, OutputHead.LINEAR_REGRESSION),
            (4, (3,), 1, OutputHead.SOFTMAX_MULTICLASS),
            (4, (3,), 2, OutputHead.SIGMOID_BINARY),
        ],
    )
    def test_invalid(self, args):
        input_dim, hidden, output_dim, head = args
        with pytest.raises(ContractViolation):
            NetworkConfig(input_dim, hidden, output_dim, Activation(K.RELU), head)

    def test_dict_round_trip(self):
        config = _config(5, (7, 3), 4, K.S4_LITERAL, OutputHead.SOFTMAX_MULTICLASS)
        assert NetworkConfig.from_dict(config.to_dict()) == config

    @pytest.mark.parametrize(
        "fields",
        [{"val_fraction": 1.0}, {"val_fraction": 0.0}, {"patience": 60},
         {"batch_size": 0}, {"learning_rate": 0.0}, {"beta2": 1.0}],
    )
    def test_invalid_train_config(self, fields):
        with pytest.raises(ContractViolation):
            TrainConfig(**fields)


class TestInit:
    def test_deterministic(self):
        config = _config(20, (64, 32, 16), kind=K.S4_RESCALED,
                         head=OutputHead.SIGMOID_BINARY)
        a, b = init_network(config, 42), init_network(config, 42)
        for pa, pb in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(pa, pb)

    def test_glorot_bounds(self):
        net = init_network(_config(20, (64, 32, 16)), 3)
        for w, b in zip(net.weights, net.biases):
            fan_out, fan_in = w.shape
            assert np.max(np.abs(w)) <= math.sqrt(6.0 / (fan_in + fan_out))
            assert not np.any(b)

    def test_glorot_normal(self):
        net = init_network(_config(50, (50,), init=Init.GLOROT_NORMAL), 0)
        assert np.std(net.weights[0]) == pytest.approx(math.sqrt(2.0 / 100), rel=0.1)

    def test_parameter_count(self):
        assert init_network(_config(1, (1,)), 0).num_parameters == 4


class TestForward:
    def test_zero_weights_sigmoid_head(self):
        config = _config(3, (4,), head=OutputHead.SIGMOID_BINARY)
        net = DenseNetwork(config, [np.zeros((4, 3)), np.zeros((1, 4))],
                           [np.zeros(4), np.zeros(1)])
        out = net.predict(np.random.default_rng(0).standard_normal((6, 3)))
        np.testing.assert_array_equal(out, np.full((6, 1), 0.5))

    def test_relu_hidden(self):
        net = DenseNetwork(_config(1, (1,), kind=K.RELU), [[[1.0]], [[1.0]]], [[0.0], [0.0]])
        trace = net.forward(np.array([[-3.0]]))
        assert trace.activations[1][0, 0] == 0.0
        assert trace.outputs[0, 0] == 0.0

    def test_output_shape(self):
        config = _config(4, (64, 32, 16), 3, K.S4_RESCALED, OutputHead.SOFTMAX_MULTICLASS)
        out = init_network(config, 0).predict(np.random.default_rng(1).standard_normal((10, 4)))
        assert out.shape == (10, 3)
        assert np.all(np.isfinite(out))
        np.testing.assert_allclose(out.sum(axis=1), 1.0)

    def test_non_finite_names_the_layer(self):
        net = DenseNetwork(_config(1, (1,), kind=K.RELU), [[[1.0]], [[1.0]]], [[0.0], [0.0]])
        with pytest.raises(NumericError, match="layer 1"):
            net.forward(np.array([[math.nan]]))

    def test_wrong_width(self):
        with pytest.raises(ContractViolation):
            init_network(_config(3, (4,)), 0).forward(np.zeros((2, 5)))

    def test_rejects_bad_shapes(self):
        with pytest.raises(ContractViolation):
            DenseNetwork(_config(1, (1,)), [[[1.0, 2.0]], [[1.0]]], [[0.0], [0.0]])


class TestBackward:
    def test_zero_gradient_at_fit(self):
        net = init_network(_config(3, (5, 4)), 0)
        x = np.random.default_rng(0).standard_normal((7, 3))
        trace = net.forward(x)
        grads = net.backward(trace, trace.outputs[:, 0].copy(), LossKind.MSE)
        assert all(not np.any(g) for g in grads.weights + grads.biases)

    def test_last_layer_is_least_squares_residual(self):
        net = init_network(_config(3, (4,)), 1)
        rng = np.random.default_rng(2)
        x, y = rng.standard_normal((9, 3)), rng.standard_normal(9)
        trace = net.forward(x)
        grads = net.backward(trace, y)
        residual = trace.logits - y[:, None]
        hidden = trace.activations[-1]
        np.testing.assert_allclose(grads.weights[-1], 2.0 / 9 * residual.T @ hidden, rtol=1e-12)
        np.testing.assert_allclose(grads.biases[-1], 2.0 / 9 * residual.sum(axis=0), rtol=1e-12)

    def test_head_loss_mismatch(self):
        net = init_network(_config(2, (3,), head=OutputHead.SIGMOID_BINARY), 0)
        trace = net.forward(np.zeros((2, 2)))
        with pytest.raises(ContractViolation):
            net.backward(trace, [0, 1], LossKind.CE)
        with pytest.raises(ContractViolation):
            net.loss(trace, [0, 1], LossKind.MSE)

    def test_kink_hits_use_left_derivative(self):
        net = init_network(_config(1, (3,), kind=K.RELU), 0)
        trace = net.forward(np.zeros((2, 1)))
        grads = net.backward(trace, [1.0, 1.0])
        assert grads.kink_hits == 6
        assert not np.any(grads.weights[0])

    def test_class_index_out_of_range(self):
        config = _config(2, (3,), 3, head=OutputHead.SOFTMAX_MULTICLASS)
        net = init_network(config, 0)
        with pytest.raises(ContractViolation):
            net.loss(net.forward(np.zeros((1, 2))), [3])

    def test_cross_entropy_of_uniform_logits(self):
        config = _config(2, (3,), 4, head=OutputHead.SOFTMAX_MULTICLASS)
        net = DenseNetwork(config, [np.zeros((3, 2)), np.zeros((4, 3))],
                           [np.zeros(3), np.zeros(4)])
        trace = net.forward(np.ones((5, 2)))
        assert net.loss(trace, [0, 1, 2, 3, 0]) == pytest.approx(math.log(4.0))


class TestAdam:
    def _net(self):
        return init_network(_config(1, (1,)), 0)

    def test_zero_gradient_leaves_parameters(self):
        net = self._net()
        before = [p.copy() for p in net.parameters()]
        zeros = Gradients([np.zeros_like(w) for w in net.weights],
                          [np.zeros_like(b) for b in net.biases])
        state = AdamState.zeros_like(net)
        adam_step(net, zeros, state, TrainConfig())
        assert state.t == 1
        for a, b in zip(before, net.parameters()):
            np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("g", [0.3, -2.0])
    def test_first_step_moves_by_learning_rate(self, g):
        net = self._net()
        before = net.weights[0][0, 0]
        grads = Gradients([np.array([[g]]), np.zeros((1, 1))], [np.zeros(1), np.zeros(1)])
        adam_step(net, grads, AdamState.zeros_like(net), TrainConfig(learning_rate=0.001))
        assert before - net.weights[0][0, 0] == pytest.approx(0.001 * math.copysign(1.0, g),
                                                              rel=1e-6)

    def test_non_finite_gradient(self):
        net = self._net()
        grads = Gradients([np.array([[math.nan]]), np.zeros((1, 1))],
                          [np.zeros(1), np.zeros(1)])
        with pytest.raises(NumericError):
            adam_step(net, grads, AdamState.zeros_like(net), TrainConfig())

    def test_shape_mismatch(self):
        net = self._net()
        grads = Gradients([np.zeros((2, 1)), np.zeros((1, 1))], [np.zeros(1), np.zeros(1)])
        with pytest.raises(ContractViolation):
            adam_step(net, grads, AdamState.zeros_like(net), TrainConfig())


class TestCheckpoint:
    def test_round_trip_is_bit_exact(self, tmp_path):
        config = _config(4, (6, 5), 3, K.S4_RESCALED, OutputHead.SOFTMAX_MULTICLASS)
        net = init_network(config, 9)
        path = tmp_path / "net.json"
        net.save(path)
        loaded = DenseNetwork.load(path)
        assert loaded.config == config
        for a, b in zip(net.parameters(), loaded.parameters()):
            np.testing.assert_array_equal(a, b)

    def test_rejects_foreign_document(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text('{"format": "something-else", "version": 1}')
        with pytest.raises(ContractViolation):
            DenseNetwork.load(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError, match="missing.json"):
            DenseNetwork.load(tmp_path / "missing.json")


class TestTraining:
    def _train(self, parts, kind=K.TANH, **tc):
        train_set, _ = parts
        config = NetworkConfig.for_dataset(train_set, (8,), Activation(kind))
        return train(config, train_set, TrainConfig(**{"max_epochs": 20, "patience": 3, **tc}))

    def test_separable_toy_set(self):
        data = _separable()
        for kind in (K.TANH, K.S4_RESCALED, K.RELU):
            config = NetworkConfig.for_dataset(data, (16,), Activation(kind))
            net, history = train(config, data, TrainConfig(learning_rate=0.01, seed=1))
            assert max(history.val_metric) == 1.0
            assert evaluate(net, data) >= 0.95

    def test_patience_is_honored(self, synthetic_parts):
        tc = TrainConfig(max_epochs=20, patience=3, seed=1)
        _, history = self._train(synthetic_parts, seed=1)
        assert history.epochs <= tc.max_epochs
        assert history.epochs - history.best_epoch <= tc.patience
        if history.stopped_early:
            assert history.epochs - history.best_epoch == tc.patience
        assert history.best_val_loss == min(history.val_loss)

    def test_best_weights_are_restored(self, synthetic_parts):
        train_set, _ = synthetic_parts
        tc = TrainConfig(max_epochs=20, patience=3, seed=2)
        config = NetworkConfig.for_dataset(train_set, (8,), Activation(K.SOFTSIGN))
        net, history = train(config, train_set, tc)
        _, val = _validation_split(train_set, tc)
        loss = net.loss(net.forward(val.features), val.targets)
        assert abs(loss - history.best_val_loss) <= 1e-12

    def test_deterministic(self, synthetic_parts):
        a_net, a = self._train(synthetic_parts, K.S4_RESCALED, seed=3)
        b_net, b = self._train(synthetic_parts, K.S4_RESCALED, seed=3)
        assert a.val_loss == b.val_loss
        for pa, pb in zip(a_net.parameters(), b_net.parameters()):
            np.testing.assert_array_equal(pa, pb)

    def test_history_records_gradient_statistics(self, synthetic_parts):
        _, history = self._train(synthetic_parts, K.RELU, max_epochs=3, patience=3)
        assert len(history.grad_mean_abs) == history.epochs
        assert all(len(layer) == 1 for layer in history.dead_fraction)
        assert all(0.0 <= f <= 1.0 for epoch in history.dead_fraction for f in epoch)

    def test_task_must_match_head(self, synthetic_parts):
        train_set, _ = synthetic_parts
        config = _config(train_set.n_features, (4,))
        with pytest.raises(ContractViolation):
            train(config, train_set)

    def test_regression_tail_split(self):
        rng = np.random.default_rng(0)
        data = Dataset(rng.standard_normal((50, 2)), rng.standard_normal(50), Task.REGRESSION)
        fit, val = _validation_split(data, TrainConfig())
        assert (fit.n_rows, val.n_rows) == (40, 10)

    def test_constant_target_regression(self):
        rng = np.random.default_rng(0)
        data = Dataset(rng.standard_normal((60, 2)), np.full(60, 3.0), Task.REGRESSION)
        config = NetworkConfig.for_dataset(data, (4,), Activation(K.TANH))
        _, history = train(config, data, TrainConfig(max_epochs=30, patience=30,
                                                     learning_rate=0.01))
        assert history.train_loss[-1] < history.train_loss[0]


class TestHealthAndMetrics:
    def test_sigmoid_gradients_vanish_with_depth(self, synthetic_parts):
        train_set, _ = synthetic_parts
        config = NetworkConfig.for_dataset(train_set, (100,) * 4, Activation(K.SIGMOID))
        health = gradient_health(init_network(config, 1), train_set.features,
                                 train_set.targets)
        assert health[0].mean_abs_grad / health[3].mean_abs_grad < 0.1

    def test_s4_has_no_dead_units(self, synthetic_parts):
        train_set, _ = synthetic_parts
        config = NetworkConfig.for_dataset(train_set, (100,) * 3, parse_activation("s4:k=10"))
        health = gradient_health(init_network(config, 1), train_set.features,
                                 train_set.targets)
        assert all(h.dead_fraction == 0.0 for h in health)

    def test_epochs_to_convergence(self):
        history = TrainHistory(val_loss=[1.0, 0.5, 0.302, 0.3, 0.31])
        assert epochs_to_convergence(history) == 3
        assert epochs_to_convergence(TrainHistory(val_loss=[0.4])) == 1
        with pytest.raises(ContractViolation):
            epochs_to_convergence(TrainHistory())

    def test_exact_regression_predictor(self):
        data = Dataset(np.ones((4, 2)), np.full(4, 0.5), Task.REGRESSION,
                       target_mean=10.0, target_std=2.0)
        config = NetworkConfig.for_dataset(data, (3,), Activation(K.TANH))
        net = DenseNetwork(config, [np.zeros((3, 2)), np.zeros((1, 3))],
                           [np.zeros(3), np.array([0.5])])
        assert evaluate(net, data) == 0.0

    def test_regression_mse_in_original_units(self):
        data = Dataset(np.ones((2, 1)), [1.0, -1.0], Task.REGRESSION,
                       target_mean=0.0, target_std=3.0)
        config = NetworkConfig.for_dataset(data, (2,), Activation(K.TANH))
        net = DenseNetwork(config, [np.zeros((2, 1)), np.zeros((1, 2))],
                           [np.zeros(2), np.zeros(1)])
        assert evaluate(net, data) == pytest.approx(9.0)

    def test_accuracy(self):
        data = Dataset(np.array([[1.0], [-1.0], [2.0]]), [1, 0, 0], Task.BINARY)
        config = NetworkConfig.for_dataset(data, (1,), Activation(K.RELU))
        net = DenseNetwork(config, [[[1.0]], [[1.0]]], [[0.0], [-0.5]])
        assert evaluate(net, data) == pytest.approx(2.0 / 3.0)

    def test_evaluate_needs_data(self):
        net = init_network(_config(1, (1,)), 0)
        with pytest.raises(ContractViolation):
            evaluate(net, None)
