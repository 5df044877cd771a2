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
Finite-difference oracle for activation derivatives and backpropagation

Estimates combine two central differences (step h and h/2) by Richardson
extrapolation, which removes the h^2 truncation term:
(4*D(h/2) - D(h)) / 3.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .activations import (
    ActivationKind,
    ActivationParams,
    K_GRID,
    eval_batch,
    eval_derivative_batch,
    smoothness_breaks,
    _as_kind,
)
from .common import ContractViolation, NumericError

logger = logging.getLogger(__name__)

# Saturated tails: f(x+h) - f(x-h) cancels near the asymptote, so these kinds
# are differenced through f(x) - asymptote computed without cancellation.
TAIL_START = 1.0


def _tanh_offset(x):
    # tanh(x) - sign(x)
    e = np.exp(-2.0 * np.abs(x))
    return -np.sign(x) * 2.0 * e / (1.0 + e)


_TAIL_FORMS = {ActivationKind.TANH: _tanh_offset}


def central_difference(f, x, h):
    """
    (f(x+h) - f(x-h)) / (2h)

    Works elementwise when f accepts arrays.

    :param f: Function to differentiate
    :param x: Point(s)
    :param h: Step (> 0)
    :rtype: float
    """
    if not h > 0:
        raise ContractViolation(f"h must be positive, got {h!r}")
    fp = f(x + h)
    fm = f(x - h)
    if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
        raise NumericError(f"Non-finite function value around x={x!r}")
    d = (fp - fm) / (2.0 * h)
    return float(d) if np.ndim(d) == 0 else d


def richardson_difference(f, x, h):
    """
    Central difference with the h^2 error term cancelled
    """
    return (4.0 * central_difference(f, x, h / 2.0) - central_difference(f, x, h)) / 3.0


def relative_error(a, b, floor):
    """
    |a - b| / max(|a|, |b|, floor), elementwise
    """
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


@dataclass
class GradCheckReport:
    """
    Outcome of an activation derivative check

    max_rel_error covers included grid points only.
    """

    kind: ActivationKind
    params: ActivationParams
    grid_points: int
    max_rel_error: float
    worst_x: float
    excluded_points: list
    tol: float

    @property
    def passed(self):
        return self.max_rel_error < self.tol

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "k": self.params.k,
            "grid_points": self.grid_points,
            "max_rel_error": self.max_rel_error,
            "worst_x": None if np.isnan(self.worst_x) else self.worst_x,
            "excluded_points": list(self.excluded_points),
            "tol": self.tol,
            "passed": self.passed,
        }


def check_activation(kind, params=None, lo=-10.0, hi=10.0, n=2001, h=1e-5, tol=1e-6,
                     radius=1e-3, floor=1e-8):
    """
    Compare the analytic derivative with finite differences on a uniform grid

    Grid points within radius of a kink or of a point where the derivative
    has a corner are excluded and listed.

    :param kind: Activation kind
    :type kind: ActivationKind
    :param params: Activation parameters (defaults if None)
    :param lo: Grid start
    :param hi: Grid end (lo < hi)
    :param n: Grid points (>= 2)
    :param h: Finite-difference step
    :param tol: Pass threshold on the max relative error
    :param radius: Exclusion radius
    :param floor: Denominator floor of the relative error
    :rtype: GradCheckReport
    """
    kind = _as_kind(kind)
    params = params if params is not None else ActivationParams()
    if not lo < hi or n < 2:
        raise ContractViolation(f"Need lo < hi and n >= 2, got [{lo}, {hi}] n={n}")

    xs = np.linspace(lo, hi, n)
    near = np.zeros(n, dtype=bool)
    for point in smoothness_breaks(kind, params):
        near |= np.abs(xs - point) <= radius
    included = xs[~near]

    analytic = eval_derivative_batch(kind, params, included)
    numeric = richardson_difference(lambda v: eval_batch(kind, params, v), included, h)
    if kind in _TAIL_FORMS:
        tail = np.abs(included) >= max(TAIL_START, 2.0 * h)
        numeric[tail] = richardson_difference(_TAIL_FORMS[kind], included[tail], h)
    errors = relative_error(analytic, numeric, floor)

    worst = int(np.argmax(errors)) if errors.size else 0
    report = GradCheckReport(
        kind,
        params,
        n,
        float(errors[worst]) if errors.size else 0.0,
        float(included[worst]) if errors.size else float("nan"),
        xs[near].tolist(),
        tol,
    )
    logger.debug(
        f"{kind}:k={params.k:g} max_rel_error={report.max_rel_error:.3e} "
        f"at x={report.worst_x}"
    )
    return report


def check_all_activations(k_grid=K_GRID, **kwargs):
    """
    check_activation for every kind x k

    :param k_grid: Steepness values
    :return: One report per (kind, k)
    :rtype: list of GradCheckReport
    """
    reports = []
    for kind in ActivationKind:
        for k in k_grid:
            reports.append(check_activation(kind, ActivationParams(k=float(k)), **kwargs))
    failed = [r for r in reports if not r.passed]
    if failed:
        logger.warning(f"{len(failed)} derivative check(s) failed")
    return reports


def derivative_jump(kind, params=None, x=0.0, eps=1e-9):
    """
    |f'(x+eps) - f'(x-eps)|, the size of a derivative discontinuity at x

    :rtype: float
    """
    params = params if params is not None else ActivationParams()
    d = eval_derivative_batch(kind, params, np.array([x - eps, x + eps]))
    return float(abs(d[1] - d[0]))


@dataclass
class NetworkGradCheckReport:
    """
    Outcome of a backpropagation check on sampled parameters

    Indices refer to the flattened parameter vector W1, b1, W2, b2, ...
    """

    checked: int
    max_rel_error: float
    worst_index: int
    excluded_indices: list = field(default_factory=list)
    tol: float = 1e-4

    @property
    def passed(self):
        return self.max_rel_error < self.tol

    def to_dict(self):
        return {
            "checked": self.checked,
            "max_rel_error": self.max_rel_error,
            "worst_index": self.worst_index,
            "excluded_indices": list(self.excluded_indices),
            "tol": self.tol,
            "passed": self.passed,
        }


def _flat_views(net):
    return [p.reshape(-1) for p in net.parameters()]


def _locate(offsets, index):
    layer = int(np.searchsorted(offsets, index, side="right") - 1)
    return layer, index - offsets[layer]


def _side_pattern(trace, points):
    if not points:
        return None
    return [np.stack([z > p for p in points]) for z in trace.pre_activations[:-1]]


def check_network_gradients(net, inputs, targets, loss=None, h=1e-5, tol=1e-4,
                            n_params=128, seed=0, floor=1e-5):
    """
    Compare backpropagated gradients with finite differences of the loss

    Works on a private copy of the network. A sampled parameter is excluded
    when one of its perturbations moves a hidden pre-activation across a
    kink or derivative corner of the hidden activation.

    :param net: Network to check (not modified)
    :type net: DenseNetwork
    :param inputs: Small nonempty batch
    :param targets: Matching targets
    :param loss: LossKind; must pair with the head (None: the head's own)
    :param h: Finite-difference step
    :param tol: Pass threshold on the max relative error
    :param n_params: Parameters sampled (all of them if the network is smaller)
    :param seed: Sampling seed
    :param floor: Denominator floor of the relative error
    :rtype: NetworkGradCheckReport
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[0] == 0:
        raise ContractViolation("Gradient check needs a nonempty 2-D batch")

    work = net.copy()
    trace = work.forward(inputs)
    analytic = work.backward(trace, targets, loss).flat()

    act = work.activation
    points = smoothness_breaks(act.kind, act.params)
    base_sides = _side_pattern(trace, points)

    views = _flat_views(work)
    sizes = [v.size for v in views]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    rng = np.random.default_rng(seed)
    sample = np.sort(rng.choice(total, size=min(n_params, total), replace=False))

    errors, kept, excluded = [], [], []
    for index in sample:
        layer, pos = _locate(offsets, int(index))
        view = views[layer]
        original = view[pos]
        crossed = False

        def loss_at(value):
            nonlocal crossed
            view[pos] = value
            t = work.forward(inputs)
            if base_sides is not None:
                sides = _side_pattern(t, points)
                crossed |= any(not np.array_equal(a, b) for a, b in zip(sides, base_sides))
            return work.loss(t, targets, loss)

        try:
            numeric = richardson_difference(loss_at, original, h)
        finally:
            view[pos] = original

        if crossed:
            excluded.append(int(index))
            continue
        kept.append(int(index))
        errors.append(float(relative_error(analytic[index], numeric, floor)))

    worst = int(np.argmax(errors)) if errors else 0
    report = NetworkGradCheckReport(
        len(kept),
        errors[worst] if errors else 0.0,
        kept[worst] if kept else -1,
        excluded,
        tol,
    )
    if excluded:
        logger.info(f"{len(excluded)} sampled parameter(s) excluded (kink crossing)")
    logger.debug(
        f"Network gradient check: {report.checked} parameters, "
        f"max_rel_error={report.max_rel_error:.3e}"
    )
    return report
