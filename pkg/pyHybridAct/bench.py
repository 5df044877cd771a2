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
Throughput of the fused S4 kernel against a multi-pass naive evaluation

Both modes run on the calling thread.
"""

import enum
import logging
import math
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .activations import ActivationKind, ActivationParams, eval_batch
from .common import ContractViolation

logger = logging.getLogger(__name__)

# Below this many elements per call, timings are dominated by call overhead
RELIABLE_BUFFER_LEN = 1000


class BenchMode(enum.Enum):
    NAIVE = "naive"
    FUSED = "fused"


@dataclass
class BenchResult:
    """
    :param total_seconds: Median over repetitions of the time for all iterations
    :param checksum: Sum of the last output buffer
    :param repeat_seconds: Time of each repetition
    """

    mode: BenchMode
    iterations: int
    buffer_len: int
    total_seconds: float
    checksum: float
    repeat_seconds: list

    def to_dict(self):
        return {
            "mode": self.mode.value,
            "iterations": self.iterations,
            "buffer_len": self.buffer_len,
            "total_seconds": self.total_seconds,
            "checksum": self.checksum,
            "repeat_seconds": list(self.repeat_seconds),
        }


@dataclass
class ModeComparison:
    naive: BenchResult
    fused: BenchResult
    ratio: float
    reliable: bool

    @property
    def checksum_rel_diff(self):
        a, b = self.naive.checksum, self.fused.checksum
        scale = max(abs(a), abs(b))
        return abs(a - b) / scale if scale else 0.0

    def to_dict(self):
        return {
            "naive": self.naive.to_dict(),
            "fused": self.fused.to_dict(),
            "ratio": self.ratio if math.isfinite(self.ratio) else None,
            "reliable": self.reliable,
            "checksum_rel_diff": self.checksum_rel_diff,
        }


def naive_s4(xs, k, rescaled=True):
    """
    S4 the straightforward way: gate, sigmoid and softsign as separate
    passes, each overflow-safe branch computed in full by np.where

    :rtype: numpy.ndarray
    """
    with np.errstate(over="ignore", invalid="ignore"):
        kx = k * xs
        alpha = np.where(kx >= 0, 1.0 / (1.0 + np.exp(-kx)), np.exp(kx) / (1.0 + np.exp(kx)))
        sigma = np.where(xs >= 0, 1.0 / (1.0 + np.exp(-xs)), np.exp(xs) / (1.0 + np.exp(xs)))
    soft = xs / (1.0 + np.abs(xs))
    if rescaled:
        soft = 0.5 * (1.0 + soft)
    return alpha * soft + (1.0 - alpha) * sigma


def bench_s4(mode, iterations=10000, buffer_len=10000, k=10.0, seed=0, repeats=5,
             warmup=100, variant="rescaled"):
    """
    Time iterations evaluations of S4 over a seeded buffer in [-10, 10]

    :param mode: BenchMode
    :param iterations: Evaluations per repetition
    :param buffer_len: Elements per evaluation
    :param k: Gate steepness
    :param seed: Buffer seed
    :param repeats: Repetitions (median reported)
    :param warmup: Untimed evaluations before timing
    :rtype: BenchResult
    """
    mode = BenchMode(mode)
    if iterations < 0 or buffer_len < 1 or repeats < 1:
        raise ContractViolation("Need iterations >= 0, buffer_len >= 1 and repeats >= 1")
    rescaled = variant == "rescaled"
    xs = np.random.default_rng(seed).uniform(-10.0, 10.0, buffer_len)

    if mode is BenchMode.NAIVE:
        def step():
            return naive_s4(xs, k, rescaled)
    else:
        kind = ActivationKind.S4_RESCALED if rescaled else ActivationKind.S4_LITERAL
        params = ActivationParams(k=k)
        out = np.empty_like(xs)

        def step():
            return eval_batch(kind, params, xs, out)

    for _ in range(warmup):
        step()

    times = []
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        for _ in range(iterations):
            result = step()
        times.append(time.perf_counter() - start)

    checksum = float(np.sum(result)) if result is not None else 0.0
    total = statistics.median(times)
    logger.debug(f"{mode.value}: {iterations}x{buffer_len} in {total:.4f}s")
    return BenchResult(mode, iterations, buffer_len, total, checksum, times)


def compare_modes(iterations=10000, buffer_len=10000, k=10.0, seed=0, repeats=5,
                  warmup=100, variant="rescaled"):
    """
    naive.total_seconds / fused.total_seconds on the same buffer

    :rtype: ModeComparison
    """
    naive = bench_s4(BenchMode.NAIVE, iterations, buffer_len, k, seed, repeats, warmup, variant)
    fused = bench_s4(BenchMode.FUSED, iterations, buffer_len, k, seed, repeats, warmup, variant)
    ratio = naive.total_seconds / fused.total_seconds if fused.total_seconds > 0 else math.nan
    reliable = buffer_len >= RELIABLE_BUFFER_LEN and iterations > 0
    if not reliable:
        logger.warning(
            f"buffer_len={buffer_len}, iterations={iterations}: "
            "below reliable timing threshold"
        )
    return ModeComparison(naive, fused, ratio, reliable)
