"""
SCBench 프로젝트 - BISC 곱셈-누산기
다운 카운터와 FSM/MUX 결정적 비트 선택기를 이용한 저지연 SC MAC
"""

import functools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from src.arithmetic.numeric import FixedPoint
from src.utils.errors import ShapeError

logger = logging.getLogger(__name__)

FORCED_ZERO = -1


class MacImpl(Enum):
    """PE 구성: 어느 피연산자가 다운 카운터를 구동하는지"""
    WEIGHT_COUNTED = 'weight-counted'   # 가중치가 카운트, 입력 비트를 선택
    INPUT_COUNTED = 'input-counted'     # 입력이 카운트, 가중치 비트를 선택


def _trailing_zeros(c: int) -> int:
    return (c & -c).bit_length() - 1


@functools.lru_cache(maxsize=None)
def _selector_table(exponent: int) -> Tuple[int, ...]:
    period = 1 << exponent
    table = [exponent - 1 - _trailing_zeros(c) for c in range(1, period)]
    table.append(FORCED_ZERO)
    return tuple(table)


def selector_sequence(N: int) -> list:
    """
    결정적 비트 선택 순서 (길이 2^N)

    사이클 c(1부터)에서 비트 N-1-tz(c)를 고르고 마지막 사이클 c=2^N은 상수 0.
    비트 k는 한 주기 동안 정확히 2^k번 선택된다.
    """
    if N < 1:
        raise ValueError(f"선택기 지수는 1 이상이어야 합니다: {N}")
    return list(_selector_table(N))


@dataclass(frozen=True)
class SelectorFsm:
    """상수 메모리로 구현된 선택기 FSM (PU 내 모든 PE가 공유)"""
    exponent: int
    table: Tuple[int, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if not self.table:
            object.__setattr__(self, 'table', _selector_table(self.exponent))
        elif len(self.table) != (1 << self.exponent):
            raise ShapeError(f"선택기 테이블 길이 오류: {len(self.table)} != {1 << self.exponent}")

    @property
    def period(self) -> int:
        return 1 << self.exponent

    def index(self, cycle: int) -> int:
        """사이클 c (1..2^N)에서 선택되는 비트 인덱스"""
        return self.table[cycle - 1]

    def bit(self, magnitude: int, cycle: int) -> int:
        index = self.index(cycle)
        return 0 if index == FORCED_ZERO else (magnitude >> index) & 1


@dataclass
class BiscMacUnit:
    """
    BISC MAC 유닛 (가변 상태 머신)

    다운 카운터가 0이 될 때까지 매 사이클 선택기가 고른 비트만큼
    누산기를 ±1 갱신한다.
    """
    selector: SelectorFsm
    acc: int = 0
    down_counter: int = 0
    operand: int = 0
    direction: int = 1
    cycle: int = 0

    def load(self, counted: int, selected: int, direction: int):
        """반복 시작: 카운트 대상 크기, 비트 선택 대상 크기, 누산 방향"""
        limit = self.selector.period - 1
        # raw 최솟값 -2^N의 크기 2^N은 N비트 카운터/선택기에 들어가지 않아 2^N-1로 자른다
        if abs(counted) > limit or abs(selected) > limit:
            logger.debug(f"BISC 피연산자 크기를 {limit}로 자릅니다: counted={counted}, selected={selected}")
        self.down_counter = min(abs(counted), limit)
        self.operand = min(abs(selected), limit)
        self.direction = 1 if direction >= 0 else -1
        self.cycle = 0

    def step(self) -> bool:
        """한 사이클 진행, 반복이 끝났으면 False"""
        if self.down_counter == 0:
            return False
        self.cycle += 1
        self.acc += self.direction * self.selector.bit(self.operand, self.cycle)
        self.down_counter -= 1
        return True

    def run(self) -> int:
        """반복이 끝날 때까지 진행, 소요 사이클 반환"""
        start = self.cycle
        while self.step():
            pass
        return self.cycle - start


def product_scale(int_bits: int, frac_bits: int) -> float:
    """누산 카운트 1의 실수 가중치 2^(I-F)"""
    return 2.0 ** (int_bits - frac_bits)


def bisc_mac(x: FixedPoint, w: FixedPoint, impl: MacImpl = MacImpl.INPUT_COUNTED,
             acc_in: int = 0, selector: Optional[Sequence[int]] = None) -> Tuple[int, int]:
    """
    BISC 곱셈-누산

    Args:
        x: 입력 활성값
        w: 가중치
        impl: INPUT_COUNTED(|x|만큼 카운트) 또는 WEIGHT_COUNTED(|w|만큼 카운트)
        acc_in: 누산기 초기값
        selector: 선택 순서 재정의 (기본은 결정적 FSM 순서)

    Returns:
        (acc_out, 소요 사이클)
    """
    if isinstance(impl, str):
        impl = MacImpl(impl)
    if (x.int_bits, x.frac_bits) != (w.int_bits, w.frac_bits):
        raise ShapeError("입력과 가중치의 고정소수점 포맷이 다릅니다")

    exponent = x.int_bits + x.frac_bits
    fsm = SelectorFsm(exponent, tuple(selector) if selector is not None else ())
    unit = BiscMacUnit(fsm, acc=acc_in)

    if impl is MacImpl.INPUT_COUNTED:
        unit.load(x.magnitude, w.magnitude, x.sign * w.sign)
    else:
        unit.load(w.magnitude, x.magnitude, x.sign * w.sign)

    cycles = unit.run()
    return unit.acc, cycles


@functools.lru_cache(maxsize=8)
def ones_prefix_table(N: int) -> np.ndarray:
    """
    결정적 스트림 누적 1 개수 테이블

    table[m, n] = 크기 m의 스트림 앞 n비트 중 1의 개수 (0 <= n <= 2^N)
    """
    period = 1 << N
    index = np.asarray(_selector_table(N), dtype=np.int64)
    magnitudes = np.arange(period, dtype=np.int64)[:, None]
    bits = np.where(index[None, :] >= 0, (magnitudes >> np.maximum(index, 0)[None, :]) & 1, 0)
    table = np.zeros((period, period + 1), dtype=np.int32)
    table[:, 1:] = np.cumsum(bits, axis=1)
    table.flags.writeable = False
    return table


def bisc_product_counts(counted_raw: np.ndarray, selected_raw: np.ndarray, exponent: int) -> np.ndarray:
    """
    배열 단위 BISC 곱 카운트 (부호 포함)

    raw 최솟값 -2^N의 크기는 BiscMacUnit.load와 같이 2^N-1로 잘린다.

    Args:
        counted_raw: 다운 카운터를 구동하는 피연산자 raw 값
        selected_raw: 비트가 선택되는 피연산자 raw 값
        exponent: N = int_bits + frac_bits

    Returns:
        sign * ones(|selected|, |counted|) 정수 배열
    """
    limit = (1 << exponent) - 1
    counted = np.minimum(np.abs(counted_raw), limit)
    selected = np.minimum(np.abs(selected_raw), limit)
    table = ones_prefix_table(exponent)
    counts = table[selected, counted].astype(np.int64)
    return np.sign(counted_raw) * np.sign(selected_raw) * counts


def pu_iteration_cycles(values: Iterable[FixedPoint], impl: MacImpl = MacImpl.WEIGHT_COUNTED) -> int:
    """
    PU 한 반복의 평가 시간

    WEIGHT_COUNTED: PE 가중치 크기의 최댓값. INPUT_COUNTED: 공유 입력의 크기
    (모든 PE가 같은 입력을 받으므로 그 값, 여러 값이 주어지면 최댓값).
    """
    if isinstance(impl, str):
        impl = MacImpl(impl)
    magnitudes = [v.magnitude for v in values]
    if not magnitudes:
        return 0
    if impl is MacImpl.INPUT_COUNTED and len(set(magnitudes)) > 1:
        logger.debug(f"공유 입력 값이 서로 다릅니다: {sorted(set(magnitudes))}")
    return max(magnitudes)
