"""
SCBench 프로젝트 - ESL(Extended Stochastic Logic) 연산
두 양극 스트림의 비(x/y)로 값을 표현하는 포맷의 부호화, 곱셈, 덧셈, 이진 변환
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.arithmetic.bitstream import (
    RandomSource, StochasticStream, StreamFormat,
    decode, mux_add, sc_mul, sng_encode,
)
from src.arithmetic.numeric import FixedPoint, FixedPointFormat
from src.utils.errors import EslDomainError, ShapeError, StreamMismatchError

logger = logging.getLogger(__name__)


class Add2Variant(Enum):
    """2입력 ESL 덧셈기의 분모 스케일 방식"""
    HALF_CONST = 'half-const'   # 분모에 양극 1/2 스트림을 XNOR
    MUX_ZERO = 'mux-zero'       # 분모를 양극 0 스트림과 MUX
    SHIFT = 'shift'             # 분모는 그대로 두고 이진 지수 +1 (출력 인터페이스에서 2배)


class ArrayStrategy(Enum):
    """다입력 ESL 덧셈 구조"""
    TREE = 'tree'
    SEQUENTIAL = 'sequential'
    FLAT = 'flat'


@dataclass(frozen=True)
class EslNumber:
    """ESL 수: 값 = 2^scale_exp × decode(x) / decode(y)"""
    x: StochasticStream
    y: StochasticStream
    scale_exp: int = 0

    def __post_init__(self):
        if self.scale_exp < 0:
            raise EslDomainError(f"ESL 지수는 음수일 수 없습니다: {self.scale_exp}")
        if self.x.length != self.y.length:
            raise StreamMismatchError(f"ESL 분자/분모 길이 불일치: {self.x.length} != {self.y.length}")
        if self.x.format is not StreamFormat.BIPOLAR or self.y.format is not StreamFormat.BIPOLAR:
            raise StreamMismatchError("ESL 분자/분모는 양극 스트림이어야 합니다")

    @property
    def length(self) -> int:
        return self.x.length

    @property
    def exponent(self) -> int:
        return self.x.exponent

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return np.broadcast_shapes(self.x.batch_shape, self.y.batch_shape)

    def __repr__(self) -> str:
        return f"<EslNumber(length={self.length}, batch={self.batch_shape}, scale_exp={self.scale_exp})>"


def bipolar_grid(values, exponent: int) -> np.ndarray:
    """양극 SNG 해상도 2^(1-N) 격자로 반올림 (동점은 0에서 먼 쪽)"""
    grid = FixedPointFormat(1, exponent - 1)
    return np.clip(grid.round_trip(values), -1.0, 1.0)


def esl_encode(v, exponent: int, src_x: RandomSource, src_y: RandomSource) -> EslNumber:
    """
    실수를 ESL 수로 부호화

    |v| < 1이면 X = v, Y = 1. 그 외에는 X = sign(v), Y = 1/|v|.

    Args:
        v: 입력값 (스칼라 또는 배치 배열)
        exponent: 스트림 지수 N
        src_x: 분자 난수원
        src_y: 분모 난수원 (src_x와 독립)

    Returns:
        EslNumber
    """
    values = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise EslDomainError("ESL 부호화 입력에 유한하지 않은 값이 있습니다")

    magnitude = np.abs(values)
    small = magnitude < 1.0
    eps = 2.0 ** (1 - exponent)

    with np.errstate(divide='ignore'):
        reciprocal = np.where(small, 1.0, 1.0 / np.where(small, 1.0, magnitude))
    if np.any(reciprocal < eps / 2):
        worst = float(magnitude.max())
        raise EslDomainError(f"1/|v|를 2^(1-N) 정밀도로 표현할 수 없습니다: |v|={worst:g}, N={exponent}")

    x_value = bipolar_grid(np.where(small, values, np.sign(values)), exponent)
    y_value = bipolar_grid(reciprocal, exponent)

    x = sng_encode(x_value, StreamFormat.BIPOLAR, exponent, src_x, allow_full_scale=True)
    y = sng_encode(y_value, StreamFormat.BIPOLAR, exponent, src_y, allow_full_scale=True)
    return EslNumber(x, y)


def esl_constant(value: float, exponent: int, src: RandomSource,
                 batch_shape: Tuple[int, ...] = ()) -> StochasticStream:
    """상수 양극 스트림 (덧셈기 분모 스케일용)"""
    values = np.full(tuple(batch_shape), value, dtype=np.float64)
    return sng_encode(values, StreamFormat.BIPOLAR, exponent, src, allow_full_scale=True)


def esl_zero(exponent: int, src: RandomSource, batch_shape: Tuple[int, ...] = ()) -> EslNumber:
    """값 0의 ESL 수 (체인 첫 PE의 상수 입력)"""
    x = esl_constant(0.0, exponent, src, batch_shape)
    y = StochasticStream.constant(1, 1 << exponent, StreamFormat.BIPOLAR, batch_shape)
    return EslNumber(x, y)


def esl_decode_ideal(e: EslNumber, limit: Optional[float] = None):
    """
    이상적 복호화: 2^scale_exp × decode(x) / decode(y)

    Args:
        e: ESL 수
        limit: 지정 시 결과를 ±limit로 포화 (분모 0 포함)

    Returns:
        실수 또는 배치 배열
    """
    x = np.asarray(decode(e.x), dtype=np.float64)
    y = np.asarray(decode(e.y), dtype=np.float64)
    x, y = np.broadcast_arrays(x, y)
    zero = y == 0.0
    if np.any(zero) and limit is None:
        raise EslDomainError(f"ESL 분모가 0으로 복호화되었습니다 ({int(zero.sum())}개)")

    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(zero, np.sign(x) * (limit or 0.0), x / np.where(zero, 1.0, y) * 2.0 ** e.scale_exp)
    if limit is not None:
        ratio = np.clip(ratio, -limit, limit)
    return float(ratio) if ratio.ndim == 0 else ratio


def esl_mul(a: EslNumber, b: EslNumber) -> EslNumber:
    """ESL 곱셈: 분자끼리, 분모끼리 XNOR (지수는 합)"""
    return EslNumber(sc_mul(a.x, b.x), sc_mul(a.y, b.y), a.scale_exp + b.scale_exp)


def _align(e: EslNumber, scale_exp: int, src: RandomSource) -> EslNumber:
    """지수를 scale_exp로 올림: 분자에 양극 2^-d 상수를 XNOR"""
    d = scale_exp - e.scale_exp
    if d == 0:
        return e
    shrink = esl_constant(2.0 ** -d, e.exponent, src, e.batch_shape)
    return EslNumber(sc_mul(e.x, shrink), e.y, scale_exp)


def esl_add2(a: EslNumber, b: EslNumber, variant: Add2Variant = Add2Variant.HALF_CONST,
             select: RandomSource = RandomSource()) -> EslNumber:
    """
    2입력 ESL 덧셈

    분자 = MUX(Xa⊙Yb, Xb⊙Ya). MUX가 분자를 1/2로 줄이므로 분모도 1/2로 맞추거나
    (HALF_CONST, MUX_ZERO) 이진 지수를 1 올린다(SHIFT). 지수가 다르면 작은 쪽 분자를 먼저 줄인다.

    Args:
        a, b: 피연산자
        variant: HALF_CONST(1/2 상수 XNOR), MUX_ZERO(0 스트림과 MUX), SHIFT(지수 +1)
        select: MUX 선택 및 상수 스트림 난수원

    Returns:
        EslNumber (이상적 복호값 ≈ a + b)
    """
    if isinstance(variant, str):
        variant = Add2Variant(variant)
    if a.length != b.length:
        raise StreamMismatchError(f"ESL 피연산자 길이 불일치: {a.length} != {b.length}")

    exponent = a.exponent
    batch = np.broadcast_shapes(a.batch_shape, b.batch_shape)
    scale_exp = max(a.scale_exp, b.scale_exp)
    a = _align(a, scale_exp, select.derive(3))
    b = _align(b, scale_exp, select.derive(4))
    numerator = mux_add([sc_mul(a.x, b.y), sc_mul(b.x, a.y)], select.derive(0))
    product = sc_mul(a.y, b.y)

    if variant is Add2Variant.SHIFT:
        return EslNumber(numerator, product, scale_exp + 1)
    if variant is Add2Variant.HALF_CONST:
        half = esl_constant(0.5, exponent, select.derive(1), batch)
        denominator = sc_mul(product, half)
    else:
        zero = esl_constant(0.0, exponent, select.derive(1), batch)
        denominator = mux_add([product, zero], select.derive(2))
    return EslNumber(numerator, denominator, scale_exp)


def _tree_add(terms: Sequence[EslNumber], variant: Add2Variant, select: RandomSource) -> EslNumber:
    level = 0
    current = list(terms)
    while len(current) > 1:
        reduced = []
        for i in range(0, len(current) - 1, 2):
            reduced.append(esl_add2(current[i], current[i + 1], variant, select.derive(level, i)))
        if len(current) % 2:
            reduced.append(current[-1])
        current = reduced
        level += 1
    return current[0]


def _sequential_add(terms: Sequence[EslNumber], variant: Add2Variant, select: RandomSource) -> EslNumber:
    acc = terms[0]
    for i, term in enumerate(terms[1:], start=1):
        acc = esl_add2(acc, term, variant, select.derive(i))
    return acc


def _flat_add(terms: Sequence[EslNumber], select: RandomSource) -> EslNumber:
    f = len(terms)
    scale_exp = max(t.scale_exp for t in terms)
    terms = [_align(t, scale_exp, select.derive(2, i)) for i, t in enumerate(terms)]
    exponent = terms[0].exponent
    batch = np.broadcast_shapes(*[t.batch_shape for t in terms])

    # prefix[i] = Y_0 ⊙ ... ⊙ Y_{i-1}, suffix[i] = Y_i ⊙ ... ⊙ Y_{f-1}
    prefix: List[Optional[StochasticStream]] = [None] * (f + 1)
    suffix: List[Optional[StochasticStream]] = [None] * (f + 1)
    for i in range(f):
        prefix[i + 1] = terms[i].y if prefix[i] is None else sc_mul(prefix[i], terms[i].y)
    for i in range(f - 1, -1, -1):
        suffix[i] = terms[i].y if suffix[i + 1] is None else sc_mul(terms[i].y, suffix[i + 1])

    products = []
    for i, term in enumerate(terms):
        others = [s for s in (prefix[i], suffix[i + 1]) if s is not None]
        product = term.x
        for other in others:
            product = sc_mul(product, other)
        products.append(product)

    numerator = mux_add(products, select.derive(0))
    scale = esl_constant(1.0 / f, exponent, select.derive(1), batch)
    denominator = sc_mul(prefix[f], scale)
    return EslNumber(numerator, denominator, scale_exp)


def esl_array_add(terms: Sequence[EslNumber], strategy: ArrayStrategy = ArrayStrategy.TREE,
                  select: RandomSource = RandomSource(),
                  variant: Optional[Add2Variant] = None) -> EslNumber:
    """
    f입력 ESL 덧셈

    Args:
        terms: 더할 ESL 수 목록 (f >= 2)
        strategy: TREE(균형 이진 축약), SEQUENTIAL(왼쪽 접기), FLAT(f입력 MUX)
        select: 덧셈기별 난수원의 루트
        variant: TREE/SEQUENTIAL에서 쓰는 2입력 덧셈기 종류
                 (기본: TREE는 SHIFT, SEQUENTIAL은 HALF_CONST)

    Returns:
        EslNumber (이상적 복호값 ≈ Σ terms)
    """
    if isinstance(strategy, str):
        strategy = ArrayStrategy(strategy)
    if len(terms) < 2:
        raise StreamMismatchError(f"배열 덧셈에는 2개 이상의 항이 필요합니다: {len(terms)}")
    lengths = {t.length for t in terms}
    if len(lengths) != 1:
        raise StreamMismatchError(f"ESL 항 길이 불일치: {sorted(lengths)}")

    if isinstance(variant, str):
        variant = Add2Variant(variant)
    if strategy is ArrayStrategy.TREE:
        return _tree_add(terms, variant or Add2Variant.SHIFT, select)
    if strategy is ArrayStrategy.SEQUENTIAL:
        return _sequential_add(terms, variant or Add2Variant.HALF_CONST, select)
    return _flat_add(terms, select)


def esl_to_binary_raw(e: EslNumber, fmt: FixedPointFormat = FixedPointFormat(),
                      src: RandomSource = RandomSource()) -> np.ndarray:
    """
    이진 탐색 방식의 비트 직렬 ESL → 고정소수점 변환 (배치 지원)

    매 사이클 추정값 P로 스트림 비트 p_t를 만들고 m_t = p_t ⊙ y_t를
    x_t/2^int_bits와 비교해 P를 올리거나 내린다. 스텝은 표현 범위의 절반에서
    시작해 조정 방향이 바뀔 때마다 절반으로 줄어든다(최소 1 raw).

    지수 k = scale_exp인 수는 정수부를 k비트 줄이고 소수부를 k비트 늘린 작업 포맷에서
    비율을 찾는다. 작업 포맷의 raw는 출력 포맷의 raw와 같은 값이므로 마지막에 범위만 자른다.

    Returns:
        배치 형상의 raw 정수 배열
    """
    batch = e.batch_shape
    exponent = e.exponent
    length = e.length
    k = e.scale_exp
    work = FixedPointFormat(max(fmt.int_bits - k, 0), fmt.frac_bits + k)
    span_bits = work.int_bits + work.frac_bits

    x_bits = np.broadcast_to(e.x.bits, batch + (length,))
    y_bits = np.broadcast_to(e.y.bits, batch + (length,))

    # x를 2^int_bits로 축소: (2^I - 1)개의 양극 0 스트림과 MUX
    fan = 1 << work.int_bits
    if fan > 1:
        zero_bits = src.derive(1).words(exponent, batch) < (1 << (exponent - 1))
        chosen = src.derive(2).choices(fan, length, batch)
        x_bits = np.where(chosen == 0, x_bits, zero_bits).astype(np.uint8)

    words = src.derive(0).words(exponent, batch)
    half_length = 1 << (exponent - 1)

    guess = np.zeros(batch, dtype=np.int64)
    step = np.full(batch, 1 << span_bits, dtype=np.int64)
    direction = np.zeros(batch, dtype=np.int64)

    for t in range(length):
        # P/2^(I+F) 값의 양극 SNG 비트
        thr = (guess + (1 << span_bits)) * half_length / (1 << span_bits)
        p = words[..., t] < thr
        m = (p == y_bits[..., t].astype(bool))
        xt = x_bits[..., t].astype(bool)

        move = np.where(~m & xt, 1, np.where(m & ~xt, -1, 0))
        reversed_ = (move != 0) & (direction != 0) & (move != direction)
        step = np.where(reversed_, np.maximum(step // 2, 1), step)
        guess = np.clip(guess + move * step, work.min_raw, work.max_raw)
        direction = np.where(move != 0, move, direction)

    return np.clip(guess, fmt.min_raw, fmt.max_raw)


def esl_to_binary(e: EslNumber, out_bits: Union[FixedPointFormat, Tuple[int, int]] = FixedPointFormat(),
                  src: RandomSource = RandomSource()) -> FixedPoint:
    """
    단일 ESL 수를 고정소수점으로 변환

    Args:
        e: 배치 축이 없는 ESL 수
        out_bits: 출력 포맷 또는 (int_bits, frac_bits)
        src: 변환기 내부 SNG 난수원

    Returns:
        FixedPoint 추정값
    """
    fmt = out_bits if isinstance(out_bits, FixedPointFormat) else FixedPointFormat(*out_bits)
    if e.batch_shape:
        raise ShapeError(f"esl_to_binary는 단일 값만 받습니다 (batch={e.batch_shape}); esl_to_binary_raw를 사용하세요")
    raw = int(esl_to_binary_raw(e, fmt, src))
    return FixedPoint(raw, fmt.int_bits, fmt.frac_bits)
