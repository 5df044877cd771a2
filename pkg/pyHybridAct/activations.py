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
Closed-form activation kernels

Every kind has a forward and a derivative kernel working on float64 numpy
arrays. The scalar entry points run the very same kernels on a one element
array, so scalar and batch results are bit-identical.

:example:

>>> from pyHybridAct import ActivationKind, ActivationParams, eval_scalar
>>> eval_scalar(ActivationKind.S4_RESCALED, ActivationParams(k=10), 0.0)
0.5
>>> eval_scalar(ActivationKind.S4_LITERAL, ActivationParams(k=10), 0.0)
0.25

"""

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .common import (
    ContractViolation,
    InvalidParameterError,
    NondifferentiablePointError,
    NumericError,
)

logger = logging.getLogger(__name__)

DEFAULT_K = 15.0

# Steepness grid of the k sweeps and derivative checks
K_GRID = (5, 10, 15, 20, 30, 40, 50)

KINK_POLICIES = ("raise", "left")


class ActivationKind(enum.Enum):
    S3_LITERAL = "s3_literal"
    S3_CONTINUOUS = "s3_continuous"
    S4_LITERAL = "s4_literal"
    S4_RESCALED = "s4_rescaled"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    RELU = "relu"
    LEAKY_RELU = "leaky_relu"
    ELU = "elu"
    SWISH = "swish"
    SOFTSIGN = "softsign"
    SOFTPLUS = "softplus"

    def __str__(self):
        return self.value


S3_KINDS = (ActivationKind.S3_LITERAL, ActivationKind.S3_CONTINUOUS)
S4_KINDS = (ActivationKind.S4_LITERAL, ActivationKind.S4_RESCALED)

# The nine functions the hybrids are compared against (S3 included).
BASELINE_KINDS = (
    ActivationKind.SIGMOID,
    ActivationKind.TANH,
    ActivationKind.RELU,
    ActivationKind.LEAKY_RELU,
    ActivationKind.ELU,
    ActivationKind.SWISH,
    ActivationKind.SOFTSIGN,
    ActivationKind.SOFTPLUS,
)


@dataclass(frozen=True)
class ActivationParams:
    """
    Activation parameters

    :param k: Steepness of the S4 gate (k > 0)
    :type k: float
    :param leaky_slope: Negative side slope of Leaky ReLU, in (0, 1)
    :type leaky_slope: float
    :param elu_alpha: ELU saturation value (> 0)
    :type elu_alpha: float
    """

    k: float = DEFAULT_K
    leaky_slope: float = 0.01
    elu_alpha: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0):
            raise InvalidParameterError(f"k must be a positive real, got {self.k!r}")
        if not (0 < self.leaky_slope < 1):
            raise InvalidParameterError(
                f"leaky_slope must be in (0, 1), got {self.leaky_slope!r}"
            )
        if not (math.isfinite(self.elu_alpha) and self.elu_alpha > 0):
            raise InvalidParameterError(
                f"elu_alpha must be positive, got {self.elu_alpha!r}"
            )


@dataclass(frozen=True)
class FunctionProperties:
    """
    Static property row of an activation function

    range_lo/range_hi use +-inf for unbounded sides; the range is open unless
    lo_inclusive is set.
    """

    range_lo: float
    range_hi: float
    monotonic: bool
    zero_centered: bool
    complexity: str
    lo_inclusive: bool = False


# Forward kernels. All take (x, params, out) and fill out.


def _stable_sigmoid(x, scale=1.0):
    """
    1/(1+e^{-scale*x}) with a single exponential per element

    x >= 0 uses 1/(1+e^{-|sx|}), x < 0 uses e^{-|sx|}/(1+e^{-|sx|}).
    """
    e = np.abs(x)
    if scale != 1.0:
        e *= -scale
    else:
        np.negative(e, out=e)
    np.exp(e, out=e)
    num = np.where(x >= 0, 1.0, e)
    e += 1.0
    num /= e
    return num


def _fwd_sigmoid(x, p, out):
    out[...] = _stable_sigmoid(x)


def _fwd_tanh(x, p, out):
    np.tanh(x, out=out)


def _fwd_relu(x, p, out):
    np.maximum(x, 0.0, out=out)


def _fwd_leaky_relu(x, p, out):
    out[...] = np.where(x > 0, x, p.leaky_slope * x)


def _fwd_elu(x, p, out):
    out[...] = np.where(x > 0, x, p.elu_alpha * np.expm1(np.minimum(x, 0.0)))


def _fwd_swish(x, p, out):
    np.multiply(x, _stable_sigmoid(x), out=out)


def _fwd_softsign(x, p, out):
    np.divide(x, 1.0 + np.abs(x), out=out)


def _fwd_softplus(x, p, out):
    # max(x, 0) + log(1 + e^{-|x|})
    tail = np.log1p(np.exp(-np.abs(x)))
    np.maximum(x, 0.0, out=out)
    out += tail


def _fwd_s3(x, p, out, rescaled):
    pos = x / (1.0 + np.abs(x))
    if rescaled:
        pos += 1.0
        pos *= 0.5
    out[...] = np.where(x <= 0, _stable_sigmoid(x), pos)


def _fwd_s3_literal(x, p, out):
    _fwd_s3(x, p, out, rescaled=False)


def _fwd_s3_continuous(x, p, out):
    _fwd_s3(x, p, out, rescaled=True)


def _fwd_s4(x, p, out, rescaled):
    # alpha*softsign + (1 - alpha)*sigma, one exp for sigma, one for alpha
    sig = _stable_sigmoid(x)
    alpha = _stable_sigmoid(x, p.k)
    soft = np.abs(x)
    soft += 1.0
    np.divide(x, soft, out=soft)
    if rescaled:
        soft += 1.0
        soft *= 0.5
    np.multiply(alpha, soft, out=out)
    np.subtract(1.0, alpha, out=alpha)
    alpha *= sig
    out += alpha


def _fwd_s4_literal(x, p, out):
    _fwd_s4(x, p, out, rescaled=False)


def _fwd_s4_rescaled(x, p, out):
    _fwd_s4(x, p, out, rescaled=True)


# Derivative kernels. Inputs exactly at a kink fall on the left branch.


def _der_sigmoid(x, p, out):
    s = _stable_sigmoid(x)
    np.multiply(s, 1.0 - s, out=out)


def _der_tanh(x, p, out):
    t = np.tanh(x)
    np.subtract(1.0, t * t, out=out)


def _der_relu(x, p, out):
    out[...] = np.where(x > 0, 1.0, 0.0)


def _der_leaky_relu(x, p, out):
    out[...] = np.where(x > 0, 1.0, p.leaky_slope)


def _der_elu(x, p, out):
    out[...] = np.where(x > 0, 1.0, p.elu_alpha * np.exp(np.minimum(x, 0.0)))


def _der_swish(x, p, out):
    s = _stable_sigmoid(x)
    out[...] = s + x * s * (1.0 - s)


def _der_softsign(x, p, out):
    d = 1.0 + np.abs(x)
    np.divide(1.0, d * d, out=out)


def _der_softplus(x, p, out):
    out[...] = _stable_sigmoid(x)


def _der_s3(x, p, out, rescaled):
    s = _stable_sigmoid(x)
    d = 1.0 + np.abs(x)
    right = (0.5 if rescaled else 1.0) / (d * d)
    out[...] = np.where(x <= 0, s * (1.0 - s), right)


def _der_s3_literal(x, p, out):
    _der_s3(x, p, out, rescaled=False)


def _der_s3_continuous(x, p, out):
    _der_s3(x, p, out, rescaled=True)


def _der_s4(x, p, out, rescaled):
    # k*a(1-a)[s - sigma] + a*s' + (1-a)*sigma(1-sigma)
    sig = _stable_sigmoid(x)
    alpha = _stable_sigmoid(x, p.k)
    d = 1.0 + np.abs(x)
    soft = x / d
    soft_prime = 1.0 / (d * d)
    if rescaled:
        soft = 0.5 * (1.0 + soft)
        soft_prime *= 0.5
    out[...] = (
        p.k * alpha * (1.0 - alpha) * (soft - sig)
        + alpha * soft_prime
        + (1.0 - alpha) * sig * (1.0 - sig)
    )


def _der_s4_literal(x, p, out):
    _der_s4(x, p, out, rescaled=False)


def _der_s4_rescaled(x, p, out):
    _der_s4(x, p, out, rescaled=True)


_KERNELS = {
    ActivationKind.SIGMOID: (_fwd_sigmoid, _der_sigmoid),
    ActivationKind.TANH: (_fwd_tanh, _der_tanh),
    ActivationKind.RELU: (_fwd_relu, _der_relu),
    ActivationKind.LEAKY_RELU: (_fwd_leaky_relu, _der_leaky_relu),
    ActivationKind.ELU: (_fwd_elu, _der_elu),
    ActivationKind.SWISH: (_fwd_swish, _der_swish),
    ActivationKind.SOFTSIGN: (_fwd_softsign, _der_softsign),
    ActivationKind.SOFTPLUS: (_fwd_softplus, _der_softplus),
    ActivationKind.S3_LITERAL: (_fwd_s3_literal, _der_s3_literal),
    ActivationKind.S3_CONTINUOUS: (_fwd_s3_continuous, _der_s3_continuous),
    ActivationKind.S4_LITERAL: (_fwd_s4_literal, _der_s4_literal),
    ActivationKind.S4_RESCALED: (_fwd_s4_rescaled, _der_s4_rescaled),
}

_KINKED = (
    ActivationKind.S3_LITERAL,
    ActivationKind.S3_CONTINUOUS,
    ActivationKind.RELU,
    ActivationKind.LEAKY_RELU,
    ActivationKind.ELU,
)

# The derivative has a corner here (|x| inside softsign).
_CURVATURE_BREAKS = (
    ActivationKind.SOFTSIGN,
    ActivationKind.S4_LITERAL,
    ActivationKind.S4_RESCALED,
)

_PROPERTIES = {
    ActivationKind.S3_LITERAL: FunctionProperties(0.0, 1.0, True, False, "High"),
    ActivationKind.S3_CONTINUOUS: FunctionProperties(0.0, 1.0, True, False, "High"),
    ActivationKind.S4_LITERAL: FunctionProperties(0.0, 1.0, False, False, "High"),
    ActivationKind.S4_RESCALED: FunctionProperties(0.0, 1.0, True, False, "High"),
    ActivationKind.SIGMOID: FunctionProperties(0.0, 1.0, True, False, "High"),
    ActivationKind.TANH: FunctionProperties(-1.0, 1.0, True, True, "High"),
    ActivationKind.RELU: FunctionProperties(0.0, math.inf, True, False, "Low", True),
    ActivationKind.LEAKY_RELU: FunctionProperties(
        -math.inf, math.inf, True, False, "Low"
    ),
    ActivationKind.ELU: FunctionProperties(-1.0, math.inf, True, False, "Medium"),
    ActivationKind.SWISH: FunctionProperties(-math.inf, math.inf, False, False, "High"),
    ActivationKind.SOFTSIGN: FunctionProperties(-1.0, 1.0, True, True, "Low"),
    ActivationKind.SOFTPLUS: FunctionProperties(0.0, math.inf, True, False, "Medium"),
}


def _as_kind(kind):
    if isinstance(kind, ActivationKind):
        return kind
    try:
        return ActivationKind(str(kind).lower())
    except ValueError:
        raise InvalidParameterError(f"Unknown activation kind {kind!r}") from None


def _check_scalar(x):
    x = float(x)
    if not math.isfinite(x):
        raise NumericError(f"Activation input is not finite ({x!r})")
    return x


def kink_points(kind, params=None):
    """
    Points where the function is not differentiable

    :param kind: Activation kind
    :type kind: ActivationKind
    :return: Kink locations
    :rtype: tuple
    """
    return (0.0,) if _as_kind(kind) in _KINKED else ()


def smoothness_breaks(kind, params=None):
    """
    Kinks plus points where the derivative itself has a corner

    Central differences lose an order of accuracy around all of these.

    :rtype: tuple
    """
    kind = _as_kind(kind)
    return (0.0,) if kind in _KINKED or kind in _CURVATURE_BREAKS else ()


def jump_points(kind, params=None):
    """
    Points where the function value itself jumps (S3 literal at 0)

    :rtype: tuple
    """
    return (0.0,) if _as_kind(kind) is ActivationKind.S3_LITERAL else ()


def gate_alpha(k, x):
    """
    S4 gate 1/(1+e^{-kx}), evaluated overflow-safely

    :param k: Steepness (k > 0)
    :type k: float
    :param x: Input value
    :type x: float
    :return: Gate value in (0, 1)
    :rtype: float
    """
    k = float(k)
    if not (math.isfinite(k) and k > 0):
        raise InvalidParameterError(f"k must be a positive real, got {k!r}")
    x = float(x)
    if not math.isfinite(x):
        raise InvalidParameterError(f"x must be finite, got {x!r}")
    return float(_stable_sigmoid(np.array([x]), k)[0])


def eval_batch(kind, params, xs, out=None):
    """
    Fused batch evaluation

    Each transcendental is computed once per element.

    :param kind: Activation kind
    :type kind: ActivationKind
    :param params: Activation parameters
    :type params: ActivationParams
    :param xs: Input values
    :type xs: numpy.ndarray
    :param out: Output buffer, same shape as xs (allocated if None)
    :type out: numpy.ndarray
    :return: out
    :rtype: numpy.ndarray
    """
    kind = _as_kind(kind)
    xs = np.asarray(xs, dtype=np.float64)
    if out is None:
        out = np.empty_like(xs)
    elif out.shape != xs.shape:
        raise ContractViolation(
            f"Output buffer shape {out.shape} does not match input {xs.shape}"
        )
    _KERNELS[kind][0](xs, params, out)
    return out


def kink_hits(kind, params, xs):
    """
    Count inputs sitting exactly on a kink

    :rtype: int
    """
    points = kink_points(kind, params)
    if not points:
        return 0
    xs = np.asarray(xs)
    return int(sum(np.count_nonzero(xs == pt) for pt in points))


def eval_derivative_batch(kind, params, xs, out=None, kink_policy="raise"):
    """
    Batch analytic derivative

    :param kink_policy: "raise" rejects inputs exactly on a kink, "left" uses
        the left derivative there (S3: 0.25, ReLU: 0, Leaky ReLU: slope,
        ELU: alpha)
    :type kink_policy: str
    :return: out
    :rtype: numpy.ndarray
    """
    kind = _as_kind(kind)
    if kink_policy not in KINK_POLICIES:
        raise InvalidParameterError(f"Unknown kink policy {kink_policy!r}")
    xs = np.asarray(xs, dtype=np.float64)
    if out is None:
        out = np.empty_like(xs)
    elif out.shape != xs.shape:
        raise ContractViolation(
            f"Output buffer shape {out.shape} does not match input {xs.shape}"
        )
    if kink_policy == "raise" and kink_hits(kind, params, xs):
        raise NondifferentiablePointError(kind, kink_points(kind, params)[0])
    _KERNELS[kind][1](xs, params, out)
    return out


def eval_scalar(kind, params, x):
    """
    Scalar activation value

    :param kind: Activation kind
    :type kind: ActivationKind
    :param params: Activation parameters
    :type params: ActivationParams
    :param x: Input value
    :type x: float
    :return: Function value
    :rtype: float
    """
    x = _check_scalar(x)
    return float(eval_batch(kind, params, np.array([x]))[0])


def eval_derivative(kind, params, x):
    """
    Scalar analytic derivative

    Raises NondifferentiablePointError exactly at a kink.

    :rtype: float
    """
    x = _check_scalar(x)
    return float(eval_derivative_batch(kind, params, np.array([x]))[0])


def properties_table(kind, params=None):
    """
    Static property row (range, monotonicity, zero-centering, complexity)

    :param params: Only used for the ELU lower bound (-alpha)
    :rtype: FunctionProperties
    """
    kind = _as_kind(kind)
    props = _PROPERTIES[kind]
    if kind is ActivationKind.ELU and params is not None:
        props = FunctionProperties(
            -params.elu_alpha, math.inf, True, False, props.complexity
        )
    return props


class Activation:
    """
    An activation kind bound to its parameters

    :param kind: Activation kind
    :type kind: ActivationKind
    :param params: Activation parameters (defaults if None)
    :type params: ActivationParams

    :example:

    >>> import pyHybridAct
    >>> act = pyHybridAct.parse_activation("s4:k=10")
    >>> act.id
    's4_rescaled:k=10'
    >>> act(0.0)
    0.5

    """

    def __init__(self, kind, params=None):
        self._kind = _as_kind(kind)
        self._params = params if params is not None else ActivationParams()

    @property
    def kind(self):
        return self._kind

    @property
    def params(self):
        return self._params

    @property
    def id(self):
        """
        Stable textual identifier, e.g. s4_rescaled:k=10
        """
        p = self._params
        default = ActivationParams()
        parts = [self._kind.value]
        if self._kind in S4_KINDS:
            parts.append(f"k={p.k:g}")
        if self._kind is ActivationKind.LEAKY_RELU and p.leaky_slope != default.leaky_slope:
            parts.append(f"slope={p.leaky_slope:g}")
        if self._kind is ActivationKind.ELU and p.elu_alpha != default.elu_alpha:
            parts.append(f"alpha={p.elu_alpha:g}")
        return ":".join(parts)

    @property
    def variant(self):
        """
        literal/rescaled for the hybrids, empty for baselines
        """
        if self._kind in (ActivationKind.S3_LITERAL, ActivationKind.S4_LITERAL):
            return "literal"
        if self._kind in (ActivationKind.S3_CONTINUOUS, ActivationKind.S4_RESCALED):
            return "rescaled"
        return ""

    @property
    def properties(self):
        return properties_table(self._kind, self._params)

    def __call__(self, x, out=None):
        if np.ndim(x) == 0:
            return eval_scalar(self._kind, self._params, x)
        return eval_batch(self._kind, self._params, x, out)

    def derivative(self, x, out=None, kink_policy="raise"):
        if np.ndim(x) == 0:
            return eval_derivative(self._kind, self._params, x)
        return eval_derivative_batch(self._kind, self._params, x, out, kink_policy)

    def __eq__(self, other):
        return (
            isinstance(other, Activation)
            and self._kind is other._kind
            and self._params == other._params
        )

    def __hash__(self):
        return hash((self._kind, self._params))

    def __repr__(self):
        return f"Activation({self.id!r})"


_ALIASES = {
    "leaky": ActivationKind.LEAKY_RELU,
    "lrelu": ActivationKind.LEAKY_RELU,
    "leakyrelu": ActivationKind.LEAKY_RELU,
    "silu": ActivationKind.SWISH,
}


def parse_activation(text, variant="rescaled"):
    """
    Parse the CLI activation syntax name[:key=value[:key=value]]

    "s3" and "s4" resolve to the literal or rescaled form according to
    variant; the fully qualified names (s4_literal, ...) are accepted too.
    Keys: k, slope, alpha.

    :param text: Activation description, e.g. "s4:k=10"
    :type text: str
    :param variant: "literal" or "rescaled"
    :type variant: str
    :rtype: Activation
    """
    if variant not in ("literal", "rescaled"):
        raise InvalidParameterError(f"Unknown variant {variant!r}")
    name, *options = [part.strip() for part in text.strip().split(":")]
    name = name.lower().replace("-", "_")
    if name == "s3":
        kind = ActivationKind.S3_LITERAL if variant == "literal" else ActivationKind.S3_CONTINUOUS
    elif name == "s4":
        kind = ActivationKind.S4_LITERAL if variant == "literal" else ActivationKind.S4_RESCALED
    elif name in _ALIASES:
        kind = _ALIASES[name]
    else:
        kind = _as_kind(name)

    fields = {}
    keys = {"k": "k", "slope": "leaky_slope", "alpha": "elu_alpha"}
    for option in options:
        key, sep, value = option.partition("=")
        if not sep or key not in keys:
            raise InvalidParameterError(f"Bad activation option {option!r} in {text!r}")
        try:
            fields[keys[key]] = float(value)
        except ValueError:
            raise InvalidParameterError(f"Bad value {value!r} in {text!r}") from None
    return Activation(kind, ActivationParams(**fields))
