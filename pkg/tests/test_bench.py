import logging
import math

import numpy as np
import pytest

from pyHybridAct import (
    ActivationKind,
    ActivationParams,
    BenchMode,
    ContractViolation,
    bench_s4,
    compare_modes,
    eval_batch,
    naive_s4,
)


@pytest.mark.parametrize("rescaled,kind", [(True, ActivationKind.S4_RESCALED),
                                           (False, ActivationKind.S4_LITERAL)])
@pytest.mark.parametrize("k", [5.0, 10.0, 50.0])
def test_naive_matches_fused(rescaled, kind, k):
    xs = np.random.default_rng(0).uniform(-10.0, 10.0, 5000)
    np.testing.assert_allclose(naive_s4(xs, k, rescaled), eval_batch(kind, ActivationParams(k=k), xs),
                               rtol=1e-12, atol=1e-12)


def test_naive_is_finite_on_extreme_inputs():
    xs = np.array([-800.0, 800.0])
    out = naive_s4(xs, 50.0)
    assert np.all(np.isfinite(out))


@pytest.mark.parametrize("seed", range(10))
def test_checksums_agree(seed):
    cmp = compare_modes(iterations=2, buffer_len=200, k=10.0, seed=seed, repeats=1, warmup=0)
    assert cmp.checksum_rel_diff <= 1e-9
    assert cmp.naive.checksum != 0.0


def test_result_fields():
    result = bench_s4(BenchMode.FUSED, iterations=3, buffer_len=50, repeats=3, warmup=1)
    assert result.mode is BenchMode.FUSED
    assert (result.iterations, result.buffer_len) == (3, 50)
    assert len(result.repeat_seconds) == 3
    assert result.total_seconds == sorted(result.repeat_seconds)[1]
    assert bench_s4("naive", iterations=1, buffer_len=5, repeats=1).mode is BenchMode.NAIVE


def test_zero_iterations():
    cmp = compare_modes(iterations=0, buffer_len=2000, repeats=1, warmup=0)
    assert cmp.naive.checksum == 0.0 and cmp.fused.checksum == 0.0
    assert cmp.fused.total_seconds < 0.1
    assert not cmp.reliable
    assert math.isnan(cmp.ratio) or cmp.ratio > 0


def test_tiny_buffer_is_flagged(caplog):
    with caplog.at_level(logging.WARNING):
        cmp = compare_modes(iterations=5, buffer_len=1, repeats=1, warmup=0)
    assert not cmp.reliable
    assert "below reliable timing threshold" in caplog.text
    assert cmp.to_dict()["reliable"] is False


def test_ratio_is_positive():
    cmp = compare_modes(iterations=20, buffer_len=1000, repeats=1, warmup=1)
    assert cmp.ratio > 0
    assert cmp.reliable
    doc = cmp.to_dict()
    assert set(doc) == {"naive", "fused", "ratio", "reliable", "checksum_rel_diff"}
    assert doc["naive"]["mode"] == "naive"


@pytest.mark.parametrize("kwargs", [{"iterations": -1}, {"buffer_len": 0}, {"repeats": 0}])
def test_bad_sizes(kwargs):
    with pytest.raises(ContractViolation):
        bench_s4(BenchMode.FUSED, **kwargs)


def test_time_scales_with_iterations():
    single = bench_s4(BenchMode.FUSED, iterations=100, buffer_len=10000, repeats=7, warmup=5)
    double = bench_s4(BenchMode.FUSED, iterations=200, buffer_len=10000, repeats=7, warmup=5)
    assert 1.6 <= double.total_seconds / single.total_seconds <= 2.4
