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

import contextlib
import math


class InvalidParameterError(ValueError):
    """
    Raised when an activation or configuration parameter is out of range
    """


class NondifferentiablePointError(ValueError):
    """
    Raised when a derivative is requested exactly at a declared kink

    :param kind: Activation kind
    :param x: Input value
    """

    def __init__(self, kind, x):
        self.kind = kind
        self.x = x
        super().__init__(f"{kind} is not differentiable at x={x!r}")


class NumericError(ArithmeticError):
    """
    Raised when a non-finite value shows up in evaluation or training
    """


class DataFormatError(ValueError):
    """
    Raised by the dataset loaders on malformed input

    :param path: File being read
    :param message: What went wrong
    :param line: Line number (1-based), if known
    """

    def __init__(self, path, message, line=None):
        self.path = str(path)
        self.line = line
        where = self.path if line is None else f"{self.path}:{line}"
        super().__init__(f"{where}: {message}")


class ContractViolation(ValueError):
    """
    Raised when a caller breaks a documented precondition
    """


def split(seq, length):
    """
    Split a sequence in chunks of specific length

    The last chunk holds the remainder.
    """
    return [seq[i : i + length] for i in range(0, len(seq), length)]


def check_finite(value, what):
    """
    Raise NumericError unless value is a finite real

    :param value: Value to check
    :type value: float
    :param what: Name used in the error message
    :type what: str
    :return: The value as float
    :rtype: float
    """
    value = float(value)
    if not math.isfinite(value):
        raise NumericError(f"{what} is not finite ({value!r})")
    return value


def floor_fraction(n, fraction):
    """
    floor(n * fraction), tolerant to the representation error of fractions
    like 1 - 0.8
    """
    return int(math.floor(n * fraction + 1e-9))


def open_output(path):
    """
    Open path for text writing; file objects (e.g. sys.stdout) pass through
    unclosed
    """
    if hasattr(path, "write"):
        return contextlib.nullcontext(path)
    return open(path, "w", encoding="utf-8", newline="")
