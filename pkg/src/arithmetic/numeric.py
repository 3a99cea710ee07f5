"""
SCBench 프로젝트 - 고정소수점 수 체계
모든 가속기의 이진 인터페이스이자 기준 백엔드로 쓰이는 부호/정수/소수 고정소수점
"""

import functools
from dataclasses import dataclass
from typing import Union

import numpy as np

DEFAULT_INT_BITS = 2
DEFAULT_FRAC_BITS = 6


@dataclass(frozen=True)
class FixedPointFormat:
    """고정소수점 포맷 (부호 1비트 + 정수 + 소수)"""
    int_bits: int = DEFAULT_INT_BITS
    frac_bits: int = DEFAULT_FRAC_BITS

    def __post_init__(self):
        if self.int_bits < 0 or self.frac_bits < 0:
            raise ValueError(f"비트 수는 음수일 수 없습니다: int={self.int_bits}, frac={self.frac_bits}")

    @property
    def width(self) -> int:
        return 1 + self.int_bits + self.frac_bits

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @property
    def min_raw(self) -> int:
        return -(1 << (self.int_bits + self.frac_bits))

    @property
    def max_raw(self) -> int:
        return (1 << (self.int_bits + self.frac_bits)) - 1

    @property
    def min_value(self) -> float:
        return self.min_raw / self.scale

    @property
    def max_value(self) -> float:
        return self.max_raw / self.scale

    def quantize_raw(self, values) -> np.ndarray:
        """
        실수 배열을 raw 정수 배열로 양자화

        가장 가까운 값으로 반올림(동점은 0에서 먼 쪽)하고 범위 밖은 포화시킨다.
        """
        scaled = np.asarray(values, dtype=np.float64) * self.scale
        rounded = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
        return np.clip(rounded, self.min_raw, self.max_raw).astype(np.int64)

    def to_real(self, raw) -> np.ndarray:
        """raw 정수 배열을 실수 배열로 변환"""
        return np.asarray(raw, dtype=np.float64) / self.scale

    def round_trip(self, values) -> np.ndarray:
        """양자화 후 실수로 되돌린 값"""
        return self.to_real(self.quantize_raw(values))


@functools.total_ordering
@dataclass(frozen=True)
class FixedPoint:
    """2의 보수 raw 값을 갖는 고정소수점 수"""
    raw: int
    int_bits: int = DEFAULT_INT_BITS
    frac_bits: int = DEFAULT_FRAC_BITS

    def __post_init__(self):
        fmt = self.format
        if not fmt.min_raw <= self.raw <= fmt.max_raw:
            raise ValueError(f"raw 값이 범위를 벗어났습니다: {self.raw} ∉ [{fmt.min_raw}, {fmt.max_raw}]")

    @property
    def format(self) -> FixedPointFormat:
        return FixedPointFormat(self.int_bits, self.frac_bits)

    @property
    def width(self) -> int:
        return self.format.width

    @property
    def magnitude(self) -> int:
        return abs(self.raw)

    @property
    def sign(self) -> int:
        return -1 if self.raw < 0 else 1

    def _check_comparable(self, other: 'FixedPoint'):
        if (self.int_bits, self.frac_bits) != (other.int_bits, other.frac_bits):
            raise ValueError("서로 다른 포맷의 고정소수점 값은 비교할 수 없습니다")

    def __lt__(self, other: 'FixedPoint') -> bool:
        if not isinstance(other, FixedPoint):
            return NotImplemented
        self._check_comparable(other)
        return self.raw < other.raw

    def __float__(self) -> float:
        return to_real(self)


def quantize(v: float, int_bits: int = DEFAULT_INT_BITS, frac_bits: int = DEFAULT_FRAC_BITS) -> FixedPoint:
    """
    실수를 가장 가까운 표현 가능 값으로 양자화 (포화)

    Args:
        v: 입력 실수
        int_bits: 정수부 비트 수
        frac_bits: 소수부 비트 수

    Returns:
        FixedPoint 값
    """
    fmt = FixedPointFormat(int_bits, frac_bits)
    return FixedPoint(int(fmt.quantize_raw(v)), int_bits, frac_bits)


def to_real(f: FixedPoint) -> float:
    """FixedPoint를 실수로 변환 (정확)"""
    return f.raw / (1 << f.frac_bits)


def as_real(v: Union[FixedPoint, float]) -> float:
    """FixedPoint 또는 실수를 실수로"""
    return to_real(v) if isinstance(v, FixedPoint) else float(v)
