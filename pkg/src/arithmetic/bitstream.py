"""
SCBench 프로젝트 - 확률 비트스트림 연산
LFSR 의사난수원, 확률수 생성기(SNG), 스트림 복호화, 기본 SC 게이트 연산
"""

import functools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.arithmetic.numeric import FixedPoint, to_real
from src.utils.errors import StreamMismatchError, StreamRangeError

logger = logging.getLogger(__name__)

MAX_STREAM_EXPONENT = 16

# 폭별 최대 주기 Galois 탭 마스크 (x^k 항 -> 비트 k-1)
MAXIMAL_TAPS = {
    1: 0x1,
    2: 0x3,
    3: 0x6,
    4: 0xC,
    5: 0x14,
    6: 0x30,
    7: 0x60,
    8: 0xB8,
    9: 0x110,
    10: 0x240,
    11: 0x500,
    12: 0xE08,
    13: 0x1C80,
    14: 0x3802,
    15: 0x6000,
    16: 0xD008,
}


class StreamFormat(Enum):
    """확률수 표현 포맷"""
    UNIPOLAR = 'unipolar'
    BIPOLAR = 'bipolar'
    INVERTED_BIPOLAR = 'inverted-bipolar'


class SourceKind(Enum):
    """난수원 종류"""
    LFSR = 'lfsr'                  # 주기 2^N - 1
    FULL_PERIOD = 'full-period'    # LFSR 주기 + 0 워드 1회 = 0..2^N-1 순열
    UNIFORM = 'uniform'            # 독립 균등 난수 (이상적 스트림 모델)


# ===== LFSR =====

@dataclass(frozen=True)
class Lfsr:
    """Galois LFSR 레지스터 (불변 값)"""
    width: int
    taps: int
    state: int

    def __post_init__(self):
        if not 1 <= self.width <= MAX_STREAM_EXPONENT:
            raise ValueError(f"지원하지 않는 LFSR 폭: {self.width}")
        if self.state == 0:
            raise ValueError("LFSR 상태는 0일 수 없습니다")
        if not 0 < self.state < (1 << self.width):
            raise ValueError(f"LFSR 상태가 폭을 벗어났습니다: {self.state} (width={self.width})")

    @classmethod
    def maximal(cls, width: int, seed: int = 1) -> 'Lfsr':
        """최대 주기 다항식 LFSR 생성 (seed는 0이 아닌 값으로 매핑)"""
        if width not in MAXIMAL_TAPS:
            raise ValueError(f"최대 주기 탭이 정의되지 않은 폭: {width}")
        period = (1 << width) - 1
        return cls(width, MAXIMAL_TAPS[width], (seed % period) + 1)

    @property
    def period(self) -> int:
        return (1 << self.width) - 1

    def next(self) -> Tuple[int, 'Lfsr']:
        return lfsr_next(self)


def lfsr_next(l: Lfsr) -> Tuple[int, Lfsr]:
    """
    LFSR 한 단계 진행

    Args:
        l: 현재 LFSR

    Returns:
        (출력 워드, 진행된 LFSR)
    """
    state = l.state
    lsb = state & 1
    state >>= 1
    if lsb:
        state ^= l.taps
    return state, Lfsr(l.width, l.taps, state)


@functools.lru_cache(maxsize=None)
def _lfsr_cycle(width: int, taps: int) -> np.ndarray:
    """상태 1에서 시작하는 한 주기의 상태열 (캐시)"""
    states = []
    state = 1
    while True:
        states.append(state)
        lsb = state & 1
        state >>= 1
        if lsb:
            state ^= taps
        if state == 1 or len(states) > (1 << width):
            break
    cycle = np.asarray(states, dtype=np.int64)
    cycle.flags.writeable = False
    return cycle


def lfsr_cycle(width: int) -> np.ndarray:
    """최대 주기 LFSR의 전체 상태열"""
    return _lfsr_cycle(width, MAXIMAL_TAPS[width])


# ===== 난수원 =====

@dataclass(frozen=True)
class RandomSource:
    """
    결정적 난수원

    같은 (kind, seed)는 항상 같은 워드열을 만든다.
    lane이 주어지면 공유 레지스터의 회전 오프셋(셔플 모드)으로 동작한다.
    """
    kind: SourceKind = SourceKind.LFSR
    seed: int = 0
    lane: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, 'kind', SourceKind(self.kind))
        if self.seed < 0:
            raise ValueError(f"시드는 음수일 수 없습니다: {self.seed}")

    def derive(self, *key: int) -> 'RandomSource':
        """키로부터 독립 시드를 갖는 하위 난수원 파생"""
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=tuple(int(k) for k in key))
        child_seed = int(seq.generate_state(1, dtype=np.uint64)[0])
        return RandomSource(self.kind, child_seed, self.lane)

    def _rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def _rotations(self, period: int, shape: Tuple[int, ...]) -> np.ndarray:
        if self.lane is not None:
            index, count = self.lane
            return np.full(shape, (index * period) // max(count, 1), dtype=np.int64)
        return self._rng().integers(0, period, size=shape, dtype=np.int64)

    def words(self, exponent: int, shape: Tuple[int, ...] = (), length: Optional[int] = None) -> np.ndarray:
        """
        N비트 난수 워드열 생성

        Args:
            exponent: 워드 비트 수 N (값 범위 0..2^N-1)
            shape: 앞쪽 배치 형상
            length: 워드 개수 (기본 2^N)

        Returns:
            shape + (length,) 형상의 int64 배열
        """
        if not 1 <= exponent <= MAX_STREAM_EXPONENT:
            raise StreamRangeError(f"스트림 지수 범위 밖: {exponent}")
        length = (1 << exponent) if length is None else length
        shape = tuple(shape)

        if self.kind is SourceKind.UNIFORM:
            return self._rng().integers(0, 1 << exponent, size=shape + (length,), dtype=np.int64)

        cycle = lfsr_cycle(exponent)
        if self.kind is SourceKind.FULL_PERIOD:
            cycle = np.append(cycle, 0)
        period = cycle.shape[0]
        starts = self._rotations(period, shape)
        index = (starts[..., None] + np.arange(length, dtype=np.int64)) % period
        return cycle[index]

    def choices(self, count: int, length: int, shape: Tuple[int, ...] = ()) -> np.ndarray:
        """0..count-1 범위의 선택 인덱스열 (MUX 선택 신호)"""
        shape = tuple(shape)
        if self.kind is SourceKind.UNIFORM:
            return self._rng().integers(0, count, size=shape + (length,), dtype=np.int64)
        exponent = max(1, int(length - 1).bit_length())
        words = self.words(exponent, shape, length)
        return (words * count) >> exponent


def shared_lfsr_sources(seed: int, count: int, kind: SourceKind = SourceKind.LFSR) -> List[RandomSource]:
    """하나의 LFSR을 공유하되 SNG마다 다른 회전 오프셋을 쓰는 난수원 목록"""
    return [RandomSource(kind, seed, (i, count)) for i in range(count)]


# ===== 스트림 =====

@dataclass(frozen=True, eq=False)
class StochasticStream:
    """확률 비트스트림 (마지막 축이 시간 축, 앞쪽 축은 배치)"""
    bits: np.ndarray
    format: StreamFormat = StreamFormat.BIPOLAR

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8, copy=True)
        if bits.ndim == 0:
            raise StreamMismatchError("스트림은 최소 1차원이어야 합니다")
        length = bits.shape[-1]
        if length == 0 or length & (length - 1):
            raise StreamMismatchError(f"스트림 길이는 2의 거듭제곱이어야 합니다: {length}")
        if length > (1 << MAX_STREAM_EXPONENT):
            raise StreamMismatchError(f"스트림 길이 상한 초과: {length}")
        if bits.size and bits.max() > 1:
            raise StreamMismatchError("비트 값은 0 또는 1이어야 합니다")
        bits.flags.writeable = False
        object.__setattr__(self, 'bits', bits)
        if isinstance(self.format, str):
            object.__setattr__(self, 'format', StreamFormat(self.format))

    @classmethod
    def constant(cls, bit: int, length: int, fmt: StreamFormat = StreamFormat.BIPOLAR,
                 batch_shape: Tuple[int, ...] = ()) -> 'StochasticStream':
        return cls(np.full(tuple(batch_shape) + (length,), bit, dtype=np.uint8), fmt)

    @property
    def length(self) -> int:
        return self.bits.shape[-1]

    @property
    def exponent(self) -> int:
        return self.length.bit_length() - 1

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.bits.shape[:-1]

    def popcount(self):
        return self.bits.sum(axis=-1, dtype=np.int64)

    def packed(self) -> np.ndarray:
        """비트를 바이트 단위로 패킹 (버퍼 저장 형태)"""
        return np.packbits(self.bits, axis=-1)

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other) -> bool:
        if not isinstance(other, StochasticStream):
            return NotImplemented
        return self.format is other.format and np.array_equal(self.bits, other.bits)

    def __repr__(self) -> str:
        return (f"<StochasticStream(format={self.format.value}, length={self.length}, "
                f"batch={self.batch_shape})>")


def _value_bounds(fmt: StreamFormat, exponent: int, allow_full_scale: bool) -> Tuple[float, float]:
    step = 2.0 ** -exponent
    if fmt is StreamFormat.UNIPOLAR:
        return 0.0, 1.0 if allow_full_scale else 1.0 - step
    if fmt is StreamFormat.BIPOLAR:
        return -1.0, 1.0 if allow_full_scale else 1.0 - 2 * step
    return (-1.0 if allow_full_scale else -1.0 + 2 * step), 1.0


def threshold(v, fmt: StreamFormat, exponent: int) -> np.ndarray:
    """비교기 임계값 (난수 워드가 이 값보다 작으면 1)"""
    v = np.asarray(v, dtype=np.float64)
    if fmt is StreamFormat.UNIPOLAR:
        return v * (1 << exponent)
    if fmt is StreamFormat.BIPOLAR:
        return (v + 1.0) * (1 << (exponent - 1))
    return (1.0 - v) * (1 << (exponent - 1))


def sng_encode(v: Union[FixedPoint, float, np.ndarray], fmt: StreamFormat, exponent: int,
               src: RandomSource, allow_full_scale: bool = False) -> StochasticStream:
    """
    확률수 생성기 (비교기 + 난수원)

    Args:
        v: 입력값 (FixedPoint, 실수 또는 배치 배열)
        fmt: 출력 스트림 포맷
        exponent: 스트림 지수 N (길이 2^N)
        src: 난수원
        allow_full_scale: 전부 1인 스트림(값 1)을 허용할지 여부

    Returns:
        StochasticStream
    """
    if isinstance(fmt, str):
        fmt = StreamFormat(fmt)
    values = np.asarray(to_real(v) if isinstance(v, FixedPoint) else v, dtype=np.float64)
    lo, hi = _value_bounds(fmt, exponent, allow_full_scale)
    eps = 1e-12
    if values.size and (values.min() < lo - eps or values.max() > hi + eps):
        raise StreamRangeError(
            f"{fmt.value} SNG 입력 범위 [{lo}, {hi}] 밖의 값: "
            f"min={values.min():.6g}, max={values.max():.6g}"
        )
    words = src.words(exponent, values.shape)
    bits = words < threshold(values, fmt, exponent)[..., None]
    return StochasticStream(bits, fmt)


def decode(s: StochasticStream):
    """
    스트림 복호화 (카운터 기반 P2B)

    단극: popcount/length, 양극: 2*popcount/length - 1
    """
    density = s.bits.mean(axis=-1, dtype=np.float64)
    if s.format is StreamFormat.UNIPOLAR:
        value = density
    elif s.format is StreamFormat.BIPOLAR:
        value = 2.0 * density - 1.0
    else:
        value = 1.0 - 2.0 * density
    return float(value) if np.ndim(value) == 0 else value


def _check_compatible(streams: Sequence[StochasticStream]):
    if not streams:
        raise StreamMismatchError("입력 스트림 목록이 비어 있습니다")
    first = streams[0]
    for s in streams[1:]:
        if s.length != first.length:
            raise StreamMismatchError(f"스트림 길이 불일치: {first.length} != {s.length}")
        if s.format is not first.format:
            raise StreamMismatchError(f"스트림 포맷 불일치: {first.format.value} != {s.format.value}")


def sc_mul(a: StochasticStream, b: StochasticStream) -> StochasticStream:
    """게이트 곱셈기: AND(단극), XNOR(양극), XOR(반전 양극)"""
    _check_compatible([a, b])
    if a.format is StreamFormat.UNIPOLAR:
        bits = a.bits & b.bits
    elif a.format is StreamFormat.BIPOLAR:
        bits = 1 - (a.bits ^ b.bits)
    else:
        bits = a.bits ^ b.bits
    return StochasticStream(bits, a.format)


def mux_add(inputs: Sequence[StochasticStream], select: RandomSource) -> StochasticStream:
    """
    MUX 기반 스케일 덧셈 (출력 기대값 = 입력 합 / f)

    Args:
        inputs: f개의 입력 스트림 (f >= 2)
        select: 선택 신호 난수원

    Returns:
        매 비트 균등 선택된 입력의 비트로 구성된 스트림
    """
    _check_compatible(inputs)
    if len(inputs) < 2:
        raise StreamMismatchError(f"MUX 덧셈에는 2개 이상의 입력이 필요합니다: {len(inputs)}")
    stacked = np.stack(np.broadcast_arrays(*[s.bits for s in inputs]), axis=0)
    index = select.choices(len(inputs), stacked.shape[-1], stacked.shape[1:-1])
    bits = np.take_along_axis(stacked, index[None, ...], axis=0)[0]
    return StochasticStream(bits, inputs[0].format)


def or_add(a: StochasticStream, b: StochasticStream) -> StochasticStream:
    """OR 덧셈 (독립 단극 입력에서 기대값 x + y - xy)"""
    _check_compatible([a, b])
    if a.format is not StreamFormat.UNIPOLAR:
        raise StreamMismatchError(f"OR 덧셈은 단극 스트림만 지원합니다: {a.format.value}")
    return StochasticStream(a.bits | b.bits, a.format)


def apc_add(inputs: Sequence[StochasticStream]) -> np.ndarray:
    """누적 병렬 카운터: 매 사이클 입력들의 1 개수 (이진 출력)"""
    if not inputs:
        return np.zeros(0, dtype=np.int64)
    lengths = {s.length for s in inputs}
    if len(lengths) != 1:
        raise StreamMismatchError(f"스트림 길이 불일치: {sorted(lengths)}")
    return np.sum(np.stack(np.broadcast_arrays(*[s.bits for s in inputs]), axis=0), axis=0, dtype=np.int64)


def stanh(K: int, s: StochasticStream) -> StochasticStream:
    """
    K상태 포화 업/다운 FSM 기반 tanh 근사 (긴 스트림에서 tanh(Kx/2))

    Args:
        K: 상태 수 (2 이상 짝수)
        s: 양극 입력 스트림

    Returns:
        상태가 K/2 이상일 때 1을 내는 양극 스트림
    """
    if K < 2 or K % 2:
        raise ValueError(f"Stanh 상태 수는 2 이상의 짝수여야 합니다: {K}")
    if s.format is not StreamFormat.BIPOLAR:
        raise StreamMismatchError(f"Stanh 입력은 양극 스트림이어야 합니다: {s.format.value}")

    steps = 2 * s.bits.astype(np.int64) - 1
    state = np.full(s.batch_shape, K // 2, dtype=np.int64)
    out = np.empty(s.bits.shape, dtype=np.uint8)
    half = K // 2
    for t in range(s.length):
        state = np.clip(state + steps[..., t], 0, K - 1)
        out[..., t] = state >= half
    return StochasticStream(out, StreamFormat.BIPOLAR)
