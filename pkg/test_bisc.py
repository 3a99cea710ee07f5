"""
SCBench 프로젝트 - BISC MAC 테스트
"""

from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.arithmetic.bisc import (
    FORCED_ZERO, BiscMacUnit, MacImpl, SelectorFsm, bisc_mac, bisc_product_counts,
    ones_prefix_table, product_scale, pu_iteration_cycles, selector_sequence,
)
from src.arithmetic.numeric import FixedPoint, quantize
from src.utils.errors import ShapeError


@pytest.mark.parametrize('N', [1, 3, 4, 8])
def test_selector_sequence_counts(N):
    sequence = selector_sequence(N)
    assert len(sequence) == 1 << N
    assert sequence[-1] == FORCED_ZERO
    counts = Counter(sequence)
    for k in range(N):
        assert counts[k] == 1 << k


def test_selector_sequence_order():
    assert selector_sequence(3) == [2, 1, 2, 0, 2, 1, 2, FORCED_ZERO]
    with pytest.raises(ValueError):
        selector_sequence(0)


def test_ones_prefix_table_full_period():
    table = ones_prefix_table(6)
    np.testing.assert_array_equal(table[:, -1], np.arange(64))
    assert (np.diff(table, axis=1) >= 0).all()


@pytest.mark.parametrize('impl', list(MacImpl))
def test_exhaustive_product_error_bound(impl):
    """N=4 모든 크기 쌍에서 |acc/2^N - x·w| <= 2·2^-N"""
    for xr in range(16):
        for wr in range(16):
            for sx, sw in [(1, 1), (-1, 1), (1, -1), (-1, -1)]:
                x = FixedPoint(sx * xr, 0, 4)
                w = FixedPoint(sw * wr, 0, 4)
                acc, cycles = bisc_mac(x, w, impl)
                assert abs(acc / 16 - float(x) * float(w)) <= 2 / 16
                assert cycles == (xr if impl is MacImpl.INPUT_COUNTED else wr)


def test_vectorized_counts_match_unit():
    xs = np.arange(-15, 16)
    ws = np.arange(-15, 16)
    counts = bisc_product_counts(xs[:, None], ws[None, :], 4)
    for i, xr in enumerate(xs):
        for j, wr in enumerate(ws):
            acc, _ = bisc_mac(FixedPoint(int(xr), 0, 4), FixedPoint(int(wr), 0, 4), MacImpl.INPUT_COUNTED)
            assert counts[i, j] == acc


def test_counter_saturates_at_period():
    x = FixedPoint(-16, 0, 4)
    w = FixedPoint(15, 0, 4)
    acc, cycles = bisc_mac(x, w)
    assert cycles == 15
    assert acc == -bisc_product_counts(np.int64(15), np.int64(15), 4)


def test_min_raw_clamp_is_logged_and_shared(caplog):
    """raw -2^N은 유닛과 벡터 테이블 모두 2^N-1로 잘림"""
    with caplog.at_level('DEBUG', logger='src.arithmetic.bisc'):
        acc, _ = bisc_mac(FixedPoint(-16, 0, 4), FixedPoint(-16, 0, 4))
    assert 'counted=16' in caplog.text
    assert acc == bisc_product_counts(np.int64(-16), np.int64(-16), 4)
    assert acc == bisc_mac(FixedPoint(15, 0, 4), FixedPoint(15, 0, 4))[0]


def test_mac_accumulates():
    x, w = quantize(0.5), quantize(0.75)
    first, _ = bisc_mac(x, w)
    second, _ = bisc_mac(x, w, acc_in=first)
    assert second == 2 * first


def test_unit_identity_weight():
    """가중치 1.0이면 누산값이 입력의 한 카운트 단위 이내"""
    w = quantize(1.0)
    scale = product_scale(2, 6)
    for raw in range(0, 256, 7):
        x = FixedPoint(raw)
        acc, _ = bisc_mac(x, w)
        assert abs(acc * scale - float(x)) <= scale


@given(st.integers(-255, 255), st.integers(-255, 255))
def test_sign_symmetry(xr, wr):
    pos, _ = bisc_mac(FixedPoint(abs(xr)), FixedPoint(abs(wr)))
    signed, _ = bisc_mac(FixedPoint(xr), FixedPoint(wr))
    assert signed == np.sign(xr) * np.sign(wr) * pos


def test_format_mismatch():
    with pytest.raises(ShapeError):
        bisc_mac(quantize(0.5, 2, 6), quantize(0.5, 1, 6))


def test_custom_selector_length_checked():
    with pytest.raises(ShapeError):
        SelectorFsm(3, (0, 1, 2))


@given(st.integers(-15, 15), st.integers(-15, 15), st.data())
def test_mac_depends_only_on_selected_bit_multiset(xr, wr, data):
    """앞 |x| 사이클에서 고르는 비트의 중복집합만 같으면 선택 순서와 무관"""
    x, w = FixedPoint(xr, 2, 2), FixedPoint(wr, 2, 2)
    base = selector_sequence(4)
    n = abs(xr)
    order = data.draw(st.permutations(base[:n])) + data.draw(st.permutations(base[n:]))
    reference, cycles = bisc_mac(x, w)

    unit = BiscMacUnit(SelectorFsm(4, tuple(order)))
    unit.load(x.magnitude, w.magnitude, x.sign * w.sign)
    assert unit.run() == cycles == n
    assert unit.acc == reference
    assert bisc_mac(x, w, selector=order) == (reference, cycles)


def test_mac_unit_step_by_step():
    unit = BiscMacUnit(SelectorFsm(3))
    unit.load(counted=3, selected=5, direction=-1)
    assert unit.run() == 3
    # 선택 순서 2,1,2 -> 5 = 0b101 의 비트 1,0,1
    assert unit.acc == -2
    assert not unit.step()


def test_pu_iteration_cycles():
    values = [quantize(0.25), quantize(-1.0), quantize(0.5)]
    assert pu_iteration_cycles(values) == 64
    assert pu_iteration_cycles(values, 'input-counted') == 64
    assert pu_iteration_cycles([]) == 0
