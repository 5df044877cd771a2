# Copyright 2026 The pyHybridAct Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Dense feed-forward networks with manual backpropagation, Adam and early
stopping

Weights are stored fan_out x fan_in, a layer computes z = a @ W.T + b. The
hidden activation is applied on every hidden layer; the output head is fixed
by the task (sigmoid + BCE, softmax + CE, linear + MSE).
"""

import enum
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .activations import Activation, ActivationKind, ActivationParams, kink_hits
from .common import ContractViolation, NumericError, check_finite, split
from .datasets import SplitSpec, Task, stratified_split

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "pyHybridAct.checkpoint"
CHECKPOINT_VERSION = 1


class OutputHead(enum.Enum):
    SIGMOID_BINARY = "sigmoid_binary"
    SOFTMAX_MULTICLASS = "softmax_multiclass"
    LINEAR_REGRESSION = "linear_regression"


class LossKind(enum.Enum):
    BCE = "bce"
    CE = "ce"
    MSE = "mse"


class Init(enum.Enum):
    GLOROT_UNIFORM = "glorot_uniform"
    GLOROT_NORMAL = "glorot_normal"


HEAD_LOSS = {
    OutputHead.SIGMOID_BINARY: LossKind.BCE,
    OutputHead.SOFTMAX_MULTICLASS: LossKind.CE,
    OutputHead.LINEAR_REGRESSION: LossKind.MSE,
}

TASK_HEAD = {
    Task.BINARY: OutputHead.SIGMOID_BINARY,
    Task.MULTICLASS: OutputHead.SOFTMAX_MULTICLASS,
    Task.REGRESSION: OutputHead.LINEAR_REGRESSION,
}


@dataclass(frozen=True)
class NetworkConfig:
    """
    Network architecture

    :param input_dim: Feature count
    :param hidden_layers: Width of each hidden layer (nonempty)
    :param output_dim: 1 for sigmoid/linear heads, number of classes for softmax
    :param hidden_activation: Activation used by every hidden layer
    :type hidden_activation: Activation
    :param output_head: OutputHead
    :param init: Weight initialisation scheme
    """

    input_dim: int
    hidden_layers: tuple
    output_dim: int
    hidden_activation: Activation
    output_head: OutputHead
    init: Init = Init.GLOROT_UNIFORM

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))
        if not self.hidden_layers:
            raise ContractViolation("hidden_layers must be nonempty")
        if min((self.input_dim, self.output_dim) + self.hidden_layers) < 1:
            raise ContractViolation(f"All layer sizes must be >= 1: {self.layer_sizes}")
        if not isinstance(self.hidden_activation, Activation):
            raise ContractViolation("hidden_activation must be an Activation")
        if self.output_head is OutputHead.SOFTMAX_MULTICLASS:
            if self.output_dim < 2:
                raise ContractViolation("A softmax head needs output_dim >= 2")
        elif self.output_dim != 1:
            raise ContractViolation(f"A {self.output_head.value} head has output_dim 1")

    @property
    def loss(self):
        return HEAD_LOSS[self.output_head]

    @property
    def layer_sizes(self):
        return (self.input_dim,) + tuple(self.hidden_layers) + (self.output_dim,)

    @property
    def arch_id(self):
        """
        Width-depth identifier, e.g. 100-3 (uniform) or 64-32-16
        """
        if len(set(self.hidden_layers)) == 1:
            return f"{self.hidden_layers[0]}-{len(self.hidden_layers)}"
        return "-".join(str(h) for h in self.hidden_layers)

    @classmethod
    def for_dataset(cls, data, hidden_layers, activation, init=Init.GLOROT_UNIFORM):
        """
        Build the config matching a dataset's shape and task
        """
        output_dim = data.num_classes if data.task is Task.MULTICLASS else 1
        return cls(data.n_features, tuple(hidden_layers), output_dim, activation,
                   TASK_HEAD[data.task], init)

    def to_dict(self):
        p = self.hidden_activation.params
        return {
            "input_dim": self.input_dim,
            "hidden_layers": list(self.hidden_layers),
            "output_dim": self.output_dim,
            "hidden_activation": {
                "kind": self.hidden_activation.kind.value,
                "k": p.k,
                "leaky_slope": p.leaky_slope,
                "elu_alpha": p.elu_alpha,
            },
            "output_head": self.output_head.value,
            "init": self.init.value,
        }

    @classmethod
    def from_dict(cls, d):
        act = d["hidden_activation"]
        activation = Activation(
            ActivationKind(act["kind"]),
            ActivationParams(act["k"], act["leaky_slope"], act["elu_alpha"]),
        )
        return cls(d["input_dim"], tuple(d["hidden_layers"]), d["output_dim"],
                   activation, OutputHead(d["output_head"]), Init(d["init"]))


@dataclass(frozen=True)
class TrainConfig:
    """
    Optimiser and schedule settings

    :param learning_rate: Adam step size
    :param batch_size: Minibatch rows
    :param max_epochs: Upper bound on epochs
    :param patience: Epochs without val_loss improvement before stopping
    :param val_fraction: Share of the training rows held out for validation
    :param seed: Seeds initialisation, split and shuffling
    """

    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 5
    val_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.val_fraction < 1:
            raise ContractViolation(f"val_fraction must be in (0, 1), got {self.val_fraction!r}")
        if self.max_epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise ContractViolation("max_epochs, batch_size and patience must be >= 1")
        if self.patience > self.max_epochs:
            raise ContractViolation(
                f"patience ({self.patience}) exceeds max_epochs ({self.max_epochs})"
            )
        if not self.learning_rate > 0 or not self.epsilon > 0:
            raise ContractViolation("learning_rate and epsilon must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ContractViolation("Adam betas must be in [0, 1)")


@dataclass
class ForwardTrace:
    """
    Everything backward needs

    activations[0] is the input batch, activations[l] the output of hidden
    layer l; pre_activations[l] is z of layer l (the last one holds the
    logits).
    """

    pre_activations: list
    activations: list
    outputs: np.ndarray

    @property
    def logits(self):
        return self.pre_activations[-1]


@dataclass
class Gradients:
    """
    Loss gradients, same shapes as the network parameters

    deltas[l] is dL/dz of layer l; kink_hits counts hidden pre-activations
    that sat exactly on a kink.
    """

    weights: list
    biases: list
    deltas: list = field(default_factory=list)
    kink_hits: int = 0

    def flat(self):
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])


def _logsumexp(z):
    m = z.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(z - m).sum(axis=1, keepdims=True)))[:, 0]


def _stable_sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0, e) / (1.0 + e)


class DenseNetwork:
    """
    Dense network bound to its NetworkConfig

    A network is single-writer: train and adam_step mutate the parameter
    arrays in place.

    :param config: Architecture
    :type config: NetworkConfig
    :param weights: One fan_out x fan_in matrix per layer
    :param biases: One fan_out vector per layer
    """

    def __init__(self, config, weights, biases):
        self._logger = logging.getLogger(__name__)
        sizes = config.layer_sizes
        if len(weights) != len(sizes) - 1 or len(biases) != len(sizes) - 1:
            raise ContractViolation(f"Expected {len(sizes) - 1} layers of parameters")
        self.config = config
        self.weights = []
        self.biases = []
        for l, (w, b) in enumerate(zip(weights, biases)):
            w = np.array(w, dtype=np.float64)
            b = np.array(b, dtype=np.float64)
            if w.shape != (sizes[l + 1], sizes[l]) or b.shape != (sizes[l + 1],):
                raise ContractViolation(
                    f"Layer {l + 1}: got W{w.shape} b{b.shape}, "
                    f"expected W{(sizes[l + 1], sizes[l])} b{(sizes[l + 1],)}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NumericError(f"Layer {l + 1} has non-finite parameters")
            self.weights.append(w)
            self.biases.append(b)

    @property
    def activation(self):
        return self.config.hidden_activation

    @property
    def num_layers(self):
        return len(self.weights)

    @property
    def num_parameters(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def parameters(self):
        """
        Parameter arrays in layer order: W1, b1, W2, b2, ...
        """
        return [a for pair in zip(self.weights, self.biases) for a in pair]

    def copy(self):
        return DenseNetwork(self.config, [w.copy() for w in self.weights],
                            [b.copy() for b in self.biases])

    def load_parameters(self, other):
        """
        Overwrite this network's parameters in place with other's
        """
        for dst, src in zip(self.parameters(), other.parameters()):
            dst[...] = src

    def forward(self, inputs):
        """
        Forward pass

        :param inputs: batch x input_dim matrix
        :return: Forward trace (pre-activations, activations, outputs)
        :rtype: ForwardTrace
        """
        a = np.asarray(inputs, dtype=np.float64)
        if a.ndim != 2 or a.shape[1] != self.config.input_dim:
            raise ContractViolation(
                f"Input shape {a.shape} does not match input_dim {self.config.input_dim}"
            )
        pre, acts = [], [a]
        last = self.num_layers - 1
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T
            z += b
            pre.append(z)
            if l < last:
                a = self.activation(z)
                acts.append(a)
            else:
                a = self._head(z)
            if not np.all(np.isfinite(a)):
                raise NumericError(f"Non-finite values in layer {l + 1}")
        return ForwardTrace(pre, acts, a)

    def _head(self, z):
        head = self.config.output_head
        if head is OutputHead.SIGMOID_BINARY:
            return _stable_sigmoid(z)
        if head is OutputHead.SOFTMAX_MULTICLASS:
            e = np.exp(z - z.max(axis=1, keepdims=True))
            return e / e.sum(axis=1, keepdims=True)
        return z.copy()

    def predict(self, inputs):
        return self.forward(inputs).outputs

    def _check_loss(self, loss):
        if loss is None:
            return self.config.loss
        if loss is not self.config.loss:
            raise ContractViolation(
                f"{loss.value} loss does not pair with a {self.config.output_head.value} head"
            )
        return loss

    def _targets(self, targets, n):
        y = np.asarray(targets)
        if self.config.loss is LossKind.CE:
            y = y.reshape(-1).astype(np.int64)
            if y.shape[0] != n:
                raise ContractViolation(f"{y.shape[0]} targets for {n} rows")
            if y.min() < 0 or y.max() >= self.config.output_dim:
                raise ContractViolation("Class index out of range for the softmax head")
            return y
        y = y.astype(np.float64).reshape(n, self.config.output_dim)
        return y

    def loss(self, trace, targets, loss=None):
        """
        Mean loss over the batch, computed from the logits

        :param trace: Forward trace
        :type trace: ForwardTrace
        :param targets: Class indices or real targets
        :param loss: Expected LossKind (must match the head), None for the head's own
        :rtype: float
        """
        kind = self._check_loss(loss)
        z = trace.logits
        n = z.shape[0]
        y = self._targets(targets, n)
        if kind is LossKind.BCE:
            # max(z, 0) - z*y + log(1 + e^{-|z|})
            per_row = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
            value = per_row.sum() / n
        elif kind is LossKind.CE:
            value = (_logsumexp(z) - z[np.arange(n), y]).sum() / n
        else:
            value = ((z - y) ** 2).sum() / n
        return check_finite(value, f"{kind.value} loss")

    def backward(self, trace, targets, loss=None):
        """
        Gradients of the mean batch loss

        Hidden layers use the left derivative on inputs exactly at a kink.

        :param trace: Trace produced by forward on this network
        :type trace: ForwardTrace
        :param targets: Class indices or real targets
        :param loss: Expected LossKind; ContractViolation if it does not pair with the head
        :rtype: Gradients
        """
        kind = self._check_loss(loss)
        z = trace.logits
        n = z.shape[0]
        y = self._targets(targets, n)

        if kind is LossKind.CE:
            delta = trace.outputs.copy()
            delta[np.arange(n), y] -= 1.0
            delta /= n
        elif kind is LossKind.BCE:
            delta = (trace.outputs - y) / n
        else:
            delta = 2.0 * (z - y) / n

        grad_w = [None] * self.num_layers
        grad_b = [None] * self.num_layers
        deltas = [None] * self.num_layers
        hits = 0
        for l in range(self.num_layers - 1, -1, -1):
            deltas[l] = delta
            grad_w[l] = delta.T @ trace.activations[l]
            grad_b[l] = delta.sum(axis=0)
            if l > 0:
                zl = trace.pre_activations[l - 1]
                hits += kink_hits(self.activation.kind, self.activation.params, zl)
                delta = (delta @ self.weights[l]) * self.activation.derivative(
                    zl, kink_policy="left"
                )
        if hits:
            self._logger.debug(f"{hits} hidden pre-activation(s) exactly on a kink")
        return Gradients(grad_w, grad_b, deltas, int(hits))

    def save(self, path):
        """
        Write a JSON checkpoint (config + flat parameter lists)

        Floats are written with repr, so load restores them bit-exactly.
        """
        doc = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "config": self.config.to_dict(),
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }
        try:
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, allow_nan=False)
        except OSError as e:
            raise type(e)(f"Cannot write checkpoint {path} : {e.strerror}") from e
        self._logger.info(f"Checkpoint written to {path}")

    @classmethod
    def load(cls, path):
        """
        Read a checkpoint written by save

        :rtype: DenseNetwork
        """
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as e:
            raise type(e)(f"Cannot read checkpoint {path} : {e.strerror}") from e
        if doc.get("format") != CHECKPOINT_FORMAT or doc.get("version") != CHECKPOINT_VERSION:
            raise ContractViolation(f"{path} is not a version {CHECKPOINT_VERSION} checkpoint")
        config = NetworkConfig.from_dict(doc["config"])
        sizes = config.layer_sizes
        weights = [
            np.array(w, dtype=np.float64).reshape(sizes[l + 1], sizes[l])
            for l, w in enumerate(doc["weights"])
        ]
        return cls(config, weights, doc["biases"])


def init_network(config, seed):
    """
    Glorot-initialised network with zero biases

    Uniform: W ~ U(+-sqrt(6/(fan_in+fan_out))); normal: std sqrt(2/(fan_in+fan_out)).

    :param config: Architecture
    :type config: NetworkConfig
    :param seed: Generator seed
    :type seed: int
    :rtype: DenseNetwork
    """
    rng = np.random.default_rng(seed)
    sizes = config.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        if config.init is Init.GLOROT_UNIFORM:
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        else:
            std = math.sqrt(2.0 / (fan_in + fan_out))
            weights.append(rng.normal(0.0, std, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return DenseNetwork(config, weights, biases)


@dataclass
class AdamState:
    """
    First/second moment estimates and timestep
    """

    m: list
    v: list
    t: int = 0

    @classmethod
    def zeros_like(cls, net):
        return cls([np.zeros_like(p) for p in net.parameters()],
                   [np.zeros_like(p) for p in net.parameters()])


def adam_step(net, grads, state, tc):
    """
    One bias-corrected Adam update, in place

    :param net: Network to update
    :type net: DenseNetwork
    :param grads: Gradients from backward
    :type grads: Gradients
    :param state: Optimiser state, advanced by one step
    :type state: AdamState
    :param tc: Training config (learning rate, betas, epsilon)
    :type tc: TrainConfig
    """
    params = net.parameters()
    g_list = [g for pair in zip(grads.weights, grads.biases) for g in pair]
    if len(g_list) != len(params) or len(state.m) != len(params):
        raise ContractViolation("Gradient/optimiser state does not match the network")
    for l, g in enumerate(g_list):
        if g.shape != params[l].shape or state.m[l].shape != params[l].shape:
            raise ContractViolation(f"Shape mismatch on parameter {l}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"Non-finite gradient on parameter array {l}")

    state.t += 1
    bc1 = 1.0 - tc.beta1 ** state.t
    bc2 = 1.0 - tc.beta2 ** state.t
    for p, g, m, v in zip(params, g_list, state.m, state.v):
        m *= tc.beta1
        m += (1.0 - tc.beta1) * g
        v *= tc.beta2
        v += (1.0 - tc.beta2) * (g * g)
        p -= tc.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + tc.epsilon)


@dataclass
class LayerHealth:
    """
    Gradient statistics of one hidden layer on a probe batch
    """

    mean_abs_grad: float
    mean_derivative: float
    dead_fraction: float


def gradient_health(net, inputs, targets):
    """
    Per-hidden-layer gradient statistics

    mean_abs_grad is the mean |dL/dz| at per-sample scale (the batch-mean
    gradient times the batch size); a unit is dead when its activation
    derivative is 0 on every row.

    :rtype: list of LayerHealth
    """
    trace = net.forward(inputs)
    grads = net.backward(trace, targets)
    n = trace.logits.shape[0]
    report = []
    for l in range(net.num_layers - 1):
        deriv = net.activation.derivative(trace.pre_activations[l], kink_policy="left")
        dead = np.all(deriv == 0.0, axis=0)
        report.append(
            LayerHealth(
                float(np.mean(np.abs(grads.deltas[l])) * n),
                float(np.mean(np.abs(deriv))),
                float(np.mean(dead)),
            )
        )
    return report


@dataclass
class TrainHistory:
    """
    Per-epoch training record

    best_epoch is 1-based; gradient statistics hold one list (per hidden
    layer) per epoch.
    """

    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_metric: list = field(default_factory=list)
    grad_mean_abs: list = field(default_factory=list)
    mean_derivative: list = field(default_factory=list)
    dead_fraction: list = field(default_factory=list)
    kink_hits: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    @property
    def epochs(self):
        return len(self.val_loss)

    @property
    def best_val_loss(self):
        return self.val_loss[self.best_epoch - 1]


def epochs_to_convergence(history, rel_tol=0.01):
    """
    First epoch whose validation loss is within rel_tol of the run's minimum

    :type history: TrainHistory
    :return: 1-based epoch
    :rtype: int
    """
    if not history.val_loss:
        raise ContractViolation("Empty training history")
    best = min(history.val_loss)
    threshold = best + rel_tol * abs(best)
    return next(e for e, loss in enumerate(history.val_loss, 1) if loss <= threshold)


def _validation_split(data, tc):
    spec = SplitSpec(1.0 - tc.val_fraction, tc.seed, data.is_classification)
    if data.is_classification:
        return stratified_split(data, spec)
    # Tail split over a seeded permutation
    perm = np.random.default_rng([tc.seed, 2]).permutation(data.n_rows)
    n_val = int(math.floor(data.n_rows * tc.val_fraction + 1e-9))
    if n_val < 1 or n_val >= data.n_rows:
        raise ContractViolation(f"Validation split of {data.n_rows} rows leaves an empty part")
    return data.subset(perm[: data.n_rows - n_val]), data.subset(perm[data.n_rows - n_val :])


def train(config, data, tc=None, probe_rows=256):
    """
    Train a freshly initialised network with early stopping

    val_fraction of the rows (stratified for classification) is held out;
    minibatches follow a seeded per-epoch shuffle. Training stops once
    val_loss has not improved for patience epochs, and the best epoch's
    weights are restored.

    :param config: Architecture
    :type config: NetworkConfig
    :param data: Training rows (already standardized)
    :type data: Dataset
    :param tc: Training config (defaults if None)
    :type tc: TrainConfig
    :param probe_rows: Rows of the training part used for gradient statistics
    :return: (network, history)
    :rtype: tuple
    """
    tc = tc or TrainConfig()
    if TASK_HEAD[data.task] is not config.output_head:
        raise ContractViolation(
            f"{data.task} data does not match a {config.output_head.value} head"
        )
    fit, val = _validation_split(data, tc)
    net = init_network(config, tc.seed)
    state = AdamState.zeros_like(net)
    rng = np.random.default_rng([tc.seed, 1])
    history = TrainHistory()
    best_net = net.copy()
    probe_x = fit.features[:probe_rows]
    probe_y = fit.targets[:probe_rows]

    logger.info(
        f"Training {config.hidden_activation.id} {config.arch_id} on {data.name} "
        f"({fit.n_rows} train / {val.n_rows} val rows, seed {tc.seed})"
    )
    for epoch in range(1, tc.max_epochs + 1):
        order = rng.permutation(fit.n_rows)
        total, hits = 0.0, 0
        for idx in split(order, tc.batch_size):
            trace = net.forward(fit.features[idx])
            total += net.loss(trace, fit.targets[idx]) * len(idx)
            grads = net.backward(trace, fit.targets[idx])
            hits += grads.kink_hits
            adam_step(net, grads, state, tc)

        val_trace = net.forward(val.features)
        val_loss = net.loss(val_trace, val.targets)
        health = gradient_health(net, probe_x, probe_y)
        history.train_loss.append(total / fit.n_rows)
        history.val_loss.append(val_loss)
        history.val_metric.append(_metric(net, val, val_trace))
        history.grad_mean_abs.append([h.mean_abs_grad for h in health])
        history.mean_derivative.append([h.mean_derivative for h in health])
        history.dead_fraction.append([h.dead_fraction for h in health])
        history.kink_hits.append(hits)
        if hits:
            logger.warning(f"Epoch {epoch}: {hits} kink hit(s), left derivative used")
        logger.debug(
            f"Epoch {epoch}: train_loss={history.train_loss[-1]:.6f} val_loss={val_loss:.6f}"
        )

        if history.best_epoch == 0 or val_loss < history.best_val_loss:
            history.best_epoch = epoch
            best_net.load_parameters(net)
        elif epoch - history.best_epoch >= tc.patience:
            history.stopped_early = True
            logger.info(f"Early stop at epoch {epoch}, best epoch {history.best_epoch}")
            break

    net.load_parameters(best_net)
    return net, history


def _metric(net, data, trace):
    if data.task is Task.REGRESSION:
        pred = trace.outputs[:, 0] * data.target_std + data.target_mean
        return float(np.mean((pred - data.original_targets()) ** 2))
    if data.task is Task.MULTICLASS:
        pred = np.argmax(trace.logits, axis=1)
    else:
        pred = (trace.logits[:, 0] > 0).astype(np.int64)
    return float(np.mean(pred == data.targets))


def evaluate(net, data):
    """
    Accuracy (classification) or MSE in original target units (regression)

    :type net: DenseNetwork
    :type data: Dataset
    :rtype: float
    """
    if data is None or data.n_rows == 0:
        raise ContractViolation("Cannot evaluate on an empty dataset")
    if TASK_HEAD[data.task] is not net.config.output_head:
        raise ContractViolation(
            f"{data.task} data does not match a {net.config.output_head.value} head"
        )
    return _metric(net, data, net.forward(data.features))
