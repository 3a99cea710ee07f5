"""
SCBench 프로젝트 - 고정소수점/비트스트림 테스트
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from src.arithmetic.bitstream import (
    Lfsr, RandomSource, SourceKind, StochasticStream, StreamFormat,
    apc_add, decode, lfsr_cycle, lfsr_next, mux_add, or_add, sc_mul,
    shared_lfsr_sources, sng_encode, stanh,
)
from src.arithmetic.numeric import FixedPoint, FixedPointFormat, quantize, to_real
from src.utils.errors import StreamMismatchError, StreamRangeError


# ===== 고정소수점 =====

def test_quantize_rounds_half_away_from_zero():
    fmt = FixedPointFormat(2, 6)
    assert_array_equal(fmt.quantize_raw([1 / 128, -1 / 128, 3 / 128]), [1, -1, 2])


def test_quantize_saturates():
    fmt = FixedPointFormat(2, 6)
    assert_array_equal(fmt.quantize_raw([10.0, -10.0]), [255, -256])
    assert quantize(10.0).raw == 255
    assert to_real(quantize(-10.0)) == -4.0


@given(st.floats(min_value=-4.0, max_value=3.984375, allow_nan=False))
def test_round_trip_within_half_lsb(v):
    fmt = FixedPointFormat(2, 6)
    once = fmt.round_trip(v)
    assert abs(once - v) <= 1 / 128 + 1e-12
    assert fmt.round_trip(once) == once


def test_fixed_point_ordering_and_sign():
    a, b = quantize(-0.5), quantize(0.25)
    assert a < b
    assert a.sign == -1 and b.sign == 1
    assert quantize(0.0).sign == 1
    assert a.magnitude == 32
    assert float(b) == 0.25
    with pytest.raises(ValueError):
        FixedPoint(256, 2, 6)
    with pytest.raises(ValueError):
        a < quantize(0.25, 1, 6)


# ===== LFSR =====

@pytest.mark.parametrize('width', range(2, 13))
def test_lfsr_cycle_is_maximal(width):
    cycle = lfsr_cycle(width)
    assert len(cycle) == (1 << width) - 1
    assert_array_equal(np.sort(cycle), np.arange(1, 1 << width))


def test_lfsr_next_matches_cycle():
    reg = Lfsr.maximal(5, seed=0)
    assert reg.state == 1
    states = []
    for _ in range(reg.period):
        word, reg = lfsr_next(reg)
        states.append(word)
    assert reg.state == 1
    assert_array_equal(states, np.roll(lfsr_cycle(5), -1))


def test_lfsr_rejects_zero_state():
    with pytest.raises(ValueError):
        Lfsr(4, 0xC, 0)


def test_random_source_derive_is_deterministic():
    root = RandomSource(SourceKind.UNIFORM, 11)
    assert_array_equal(root.derive(1, 2).words(8), root.derive(1, 2).words(8))
    assert not np.array_equal(root.derive(1, 2).words(8), root.derive(2, 1).words(8))


def test_full_period_words_are_permutation():
    words = RandomSource(SourceKind.FULL_PERIOD, 3).words(6)
    assert_array_equal(np.sort(words), np.arange(64))


def test_shared_lfsr_sources_use_distinct_rotations():
    sources = shared_lfsr_sources(0, 4, SourceKind.FULL_PERIOD)
    first = [s.words(4)[0] for s in sources]
    assert len(set(first)) == 4


# ===== SNG / 복호화 =====

@pytest.mark.parametrize('exponent', [4, 6, 8])
@pytest.mark.parametrize('fmt', [StreamFormat.UNIPOLAR, StreamFormat.BIPOLAR, StreamFormat.INVERTED_BIPOLAR])
def test_full_period_round_trip_is_exact(exponent, fmt):
    length = 1 << exponent
    k = np.arange(length)
    if fmt is StreamFormat.UNIPOLAR:
        values = k / length
    elif fmt is StreamFormat.BIPOLAR:
        values = 2 * k / length - 1
    else:
        values = 1 - 2 * k / length
    stream = sng_encode(values, fmt, exponent, RandomSource(SourceKind.FULL_PERIOD, 5))
    assert_array_equal(decode(stream), values)


def test_encode_edge_values():
    src = RandomSource(SourceKind.LFSR, 1)
    assert sng_encode(0.0, StreamFormat.UNIPOLAR, 6, src).popcount() == 0
    assert sng_encode(-1.0, StreamFormat.BIPOLAR, 6, src).popcount() == 0
    full = sng_encode(1.0, StreamFormat.BIPOLAR, 6, src, allow_full_scale=True)
    assert full.popcount() == 64
    half = sng_encode(0.5, StreamFormat.UNIPOLAR, 6, RandomSource(SourceKind.FULL_PERIOD, 9))
    assert half.popcount() == 32


def test_encode_out_of_range():
    with pytest.raises(StreamRangeError):
        sng_encode(1.0, StreamFormat.BIPOLAR, 6, RandomSource())
    with pytest.raises(ValueError):
        sng_encode(-0.1, StreamFormat.UNIPOLAR, 6, RandomSource())


def test_encode_accepts_fixed_point():
    stream = sng_encode(quantize(0.25, 0, 6), StreamFormat.BIPOLAR, 6, RandomSource(SourceKind.FULL_PERIOD))
    assert decode(stream) == 0.25


def test_stream_validation():
    with pytest.raises(StreamMismatchError):
        StochasticStream(np.ones(6, dtype=np.uint8))
    with pytest.raises(StreamMismatchError):
        StochasticStream(np.full(8, 2))
    s = StochasticStream(np.array([1, 0, 1, 1]), StreamFormat.UNIPOLAR)
    assert s.length == 4 and s.exponent == 2
    assert decode(s) == 0.75
    assert s == StochasticStream(np.array([1, 0, 1, 1]), StreamFormat.UNIPOLAR)
    assert s != StochasticStream(np.array([1, 0, 1, 1]), StreamFormat.BIPOLAR)


# ===== 게이트 =====

@pytest.mark.parametrize('fmt', [StreamFormat.UNIPOLAR, StreamFormat.BIPOLAR])
def test_gate_multiplier_expectation_is_exact(fmt):
    """전수 나열: 독립 전주기 스트림에 대해 E[decode(sc_mul)] = a·b"""
    exponent, length = 4, 16
    k = np.arange(length)
    values = k / length if fmt is StreamFormat.UNIPOLAR else 2 * k / length - 1
    for a in values:
        sa = sng_encode(a, fmt, exponent, RandomSource(SourceKind.FULL_PERIOD, 0, (3, length)))
        for b in values:
            estimates = [
                decode(sc_mul(sa, sng_encode(b, fmt, exponent, RandomSource(SourceKind.FULL_PERIOD, 0, (j, length)))))
                for j in range(length)
            ]
            assert_allclose(np.mean(estimates), a * b, atol=1e-12)


def test_gate_multiplier_monte_carlo():
    grid = np.linspace(-1.0, 1.0, 17)
    a, b = np.meshgrid(grid, grid, indexing='ij')
    root = RandomSource(SourceKind.UNIFORM, 2024)
    sa = sng_encode(a, StreamFormat.BIPOLAR, 10, root.derive(0), allow_full_scale=True)
    sb = sng_encode(b, StreamFormat.BIPOLAR, 10, root.derive(1), allow_full_scale=True)
    error = decode(sc_mul(sa, sb)) - a * b
    assert np.sqrt(np.mean(error ** 2)) < 0.05


def test_inverted_bipolar_multiplier_uses_xor():
    a = StochasticStream(np.array([1, 0, 1, 0]), StreamFormat.INVERTED_BIPOLAR)
    b = StochasticStream(np.array([1, 1, 0, 0]), StreamFormat.INVERTED_BIPOLAR)
    assert_array_equal(sc_mul(a, b).bits, [0, 1, 1, 0])


def test_mux_add_scales_sum():
    root = RandomSource(SourceKind.UNIFORM, 1)
    a = sng_encode(np.full(64, 0.5), StreamFormat.BIPOLAR, 12, root.derive(0))
    b = sng_encode(np.full(64, -0.25), StreamFormat.BIPOLAR, 12, root.derive(1))
    total = decode(mux_add([a, b], root.derive(2)))
    assert abs(np.mean(total) - 0.125) < 0.01


def test_mux_add_needs_two_inputs():
    s = StochasticStream(np.ones(8, dtype=np.uint8))
    with pytest.raises(StreamMismatchError):
        mux_add([s], RandomSource())
    with pytest.raises(StreamMismatchError):
        mux_add([s, StochasticStream(np.ones(16, dtype=np.uint8))], RandomSource())


def test_or_add_and_apc():
    a = StochasticStream(np.array([1, 0, 0, 1]), StreamFormat.UNIPOLAR)
    b = StochasticStream(np.array([0, 0, 1, 1]), StreamFormat.UNIPOLAR)
    assert_array_equal(or_add(a, b).bits, [1, 0, 1, 1])
    assert_array_equal(apc_add([a, b]), [1, 0, 1, 2])
    with pytest.raises(StreamMismatchError):
        or_add(StochasticStream(a.bits), StochasticStream(b.bits))


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=-0.9, max_value=0.9))
def test_stanh_keeps_sign(v):
    s = sng_encode(v, StreamFormat.BIPOLAR, 12, RandomSource(SourceKind.UNIFORM, 4))
    out = decode(stanh(8, s))
    if v > 0.3:
        assert out > 0
    elif v < -0.3:
        assert out < 0
    assert -1.0 <= out <= 1.0


def test_stanh_rejects_odd_states():
    s = StochasticStream(np.ones(8, dtype=np.uint8))
    with pytest.raises(ValueError):
        stanh(3, s)
