"""
SCBench 프로젝트 - 연산 백엔드
순전파의 곱셈-누산 배열을 실수/고정소수점/BISC/ESL 연산으로 채우는 교체형 구현
"""

import logging
from abc import ABC, abstractmethod
from typing import List, Optional, Tuple

import numpy as np

from src.accelerator.latency import Backend, CycleReport, default_clock_period
from src.arithmetic.bisc import MacImpl, bisc_product_counts, product_scale
from src.arithmetic.bitstream import RandomSource, SourceKind
from src.arithmetic.esl import (
    ArrayStrategy, EslNumber, esl_array_add, esl_encode, esl_mul, esl_to_binary_raw,
)
from src.arithmetic.numeric import FixedPointFormat
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

BACKEND_NAMES = ('float', 'fixed', 'bisc', 'esl-raw', 'esl-convert')

# 청크당 스트림 비트 상한 (ESL 항 수 × 출력 수 × 스트림 길이)
ESL_CHUNK_BITS = 1 << 24
# BISC 테이블 조회 한 번에 다루는 원소 수 상한
BISC_CHUNK_ELEMENTS = 1 << 22


class ArithmeticBackend(ABC):
    """
    연산 백엔드 기본 클래스

    mac_array(inputs, weights, bias)는 (..., M) 입력과 (O, M) 가중치로
    (..., O) 출력을 만든다. 입력의 첫 축은 이미지 축이다.
    """

    name = 'abstract'

    def __init__(self, clock_period_ns: float = 0.0):
        self.clock_period_ns = clock_period_ns
        self.logger = logging.getLogger(__name__)

    def new_report(self) -> CycleReport:
        return CycleReport(backend=self.name, clock_period_ns=self.clock_period_ns)

    def convert_in(self, x: np.ndarray) -> np.ndarray:
        """네트워크 입력의 이진 인터페이스 변환"""
        return x

    def convert_out(self, scores: np.ndarray) -> np.ndarray:
        return scores

    @abstractmethod
    def mac_array(self, inputs: np.ndarray, weights: np.ndarray, bias: np.ndarray, seed: int = 0,
                  layer: int = 0, images: Optional[np.ndarray] = None,
                  row_size: int = 1) -> Tuple[np.ndarray, int]:
        """(출력, 소요 사이클)"""

    def __repr__(self) -> str:
        return f"<{type(self).__name__}(name={self.name})>"


class FloatBackend(ArithmeticBackend):
    """배정밀도 실수 기준 백엔드"""

    name = 'float'

    def mac_array(self, inputs, weights, bias, seed=0, layer=0, images=None, row_size=1):
        return inputs @ np.asarray(weights).T + np.asarray(bias), 0


class FixedBackend(ArithmeticBackend):
    """
    고정소수점 백엔드

    raw 곱을 넓은 정수 누산기에 정확히 더하고 레이어 출력에서 한 번만 반올림한다.
    """

    name = 'fixed'

    def __init__(self, int_bits: int = 2, frac_bits: int = 6):
        super().__init__()
        self.fmt = FixedPointFormat(int_bits, frac_bits)

    def convert_in(self, x):
        return self.fmt.round_trip(x)

    def mac_array(self, inputs, weights, bias, seed=0, layer=0, images=None, row_size=1):
        fmt = self.fmt
        x_raw = fmt.quantize_raw(inputs)
        w_raw = fmt.quantize_raw(weights)
        b_raw = fmt.quantize_raw(bias)
        acc = x_raw @ w_raw.T + (b_raw << fmt.frac_bits)
        return fmt.round_trip(acc / float(fmt.scale * fmt.scale)), 0


class BiscBackend(ArithmeticBackend):
    """BISC 백엔드: 결정적 선택기 누적 테이블로 계산한 부호-크기 카운트"""

    name = 'bisc'

    def __init__(self, int_bits: int = 2, frac_bits: int = 6, impl: MacImpl = MacImpl.INPUT_COUNTED,
                 clock_period_ns: Optional[float] = None):
        super().__init__(clock_period_ns if clock_period_ns is not None else default_clock_period(Backend.BISC))
        self.fmt = FixedPointFormat(int_bits, frac_bits)
        self.impl = MacImpl(impl)
        self.exponent = int_bits + frac_bits

    def convert_in(self, x):
        return self.fmt.round_trip(x)

    def mac_array(self, inputs, weights, bias, seed=0, layer=0, images=None, row_size=1):
        fmt = self.fmt
        lead = inputs.shape[:-1]
        x_raw = fmt.quantize_raw(inputs).reshape(-1, inputs.shape[-1])
        w_raw = fmt.quantize_raw(weights)
        limit = (1 << self.exponent) - 1
        out_channels, terms = w_raw.shape

        counts = np.empty((len(x_raw), out_channels), dtype=np.int64)
        rows_per_chunk = max(1, BISC_CHUNK_ELEMENTS // max(1, out_channels * terms))
        for start in range(0, len(x_raw), rows_per_chunk):
            xs = x_raw[start:start + rows_per_chunk, None, :]
            if self.impl is MacImpl.INPUT_COUNTED:
                products = bisc_product_counts(xs, w_raw[None], self.exponent)
            else:
                products = bisc_product_counts(w_raw[None], xs, self.exponent)
            counts[start:start + rows_per_chunk] = products.sum(axis=-1)

        if self.impl is MacImpl.INPUT_COUNTED:
            cycles = int(np.minimum(np.abs(x_raw), limit).sum()) * out_channels
        else:
            cycles = int(np.minimum(np.abs(w_raw), limit).sum()) * len(x_raw)

        values = counts * product_scale(fmt.int_bits, fmt.frac_bits) + fmt.round_trip(bias)
        return fmt.round_trip(values).reshape(lead + (out_channels,)), cycles


class EslRawBackend(ArithmeticBackend):
    """
    ESL 백엔드 (변환 없음)

    출력마다 M개의 ESL 곱을 트리 덧셈기로 더하고 출력에서 한 번 P2B 변환한다.
    이미지마다 시드를 파생하므로 배치 크기와 무관하게 결과가 같다.
    """

    name = 'esl-raw'

    def __init__(self, sn_exponent: int = 9, int_bits: int = 2, frac_bits: int = 6,
                 source_kind: SourceKind = SourceKind.LFSR, strategy: ArrayStrategy = ArrayStrategy.TREE,
                 clock_period_ns: Optional[float] = None):
        super().__init__(clock_period_ns if clock_period_ns is not None else default_clock_period(self.name))
        self.sn_exponent = sn_exponent
        self.fmt = FixedPointFormat(int_bits, frac_bits)
        self.source_kind = SourceKind(source_kind)
        self.strategy = ArrayStrategy(strategy)

    def convert_in(self, x):
        return self.fmt.round_trip(x)

    def _reduce(self, products: List[EslNumber], src: RandomSource, row_size: int) -> EslNumber:
        if len(products) == 1:
            return products[0]
        return esl_array_add(products, self.strategy, src)

    def _dot_chunk(self, xs: np.ndarray, ws: np.ndarray, src: RandomSource, row_size: int) -> np.ndarray:
        exponent = self.sn_exponent
        products = []
        for j in range(xs.shape[1]):
            key = src.derive(j)
            ex = esl_encode(xs[:, j], exponent, key.derive(0), key.derive(1))
            ew = esl_encode(ws[:, j], exponent, key.derive(2), key.derive(3))
            products.append(esl_mul(ex, ew))
        total = self._reduce(products, src.derive(xs.shape[1], 0), row_size)
        raw = esl_to_binary_raw(total, self.fmt, src.derive(xs.shape[1], 1))
        return self.fmt.to_real(raw)

    def mac_array(self, inputs, weights, bias, seed=0, layer=0, images=None, row_size=1):
        fmt = self.fmt
        x = fmt.round_trip(inputs)
        w = fmt.round_trip(weights)
        out_channels, terms = w.shape
        images = np.arange(len(x)) if images is None else images
        length = 1 << self.sn_exponent
        chunk = max(1, ESL_CHUNK_BITS // (terms * length))

        outputs = np.empty(x.shape[:-1] + (out_channels,), dtype=np.float64)
        for b, image_index in enumerate(images):
            rows = x[b].reshape(-1, terms)
            # 작업 = (출력 위치, 출력 채널) 쌍
            task_x = np.repeat(rows, out_channels, axis=0)
            task_w = np.tile(w, (len(rows), 1))
            sums = np.empty(len(task_x), dtype=np.float64)
            root = RandomSource(self.source_kind, seed).derive(int(image_index), layer)
            for c, start in enumerate(range(0, len(task_x), chunk)):
                stop = start + chunk
                sums[start:stop] = self._dot_chunk(task_x[start:stop], task_w[start:stop],
                                                   root.derive(c), row_size)
            outputs[b] = sums.reshape(x[b].shape[:-1] + (out_channels,))

        values = fmt.round_trip(outputs + fmt.round_trip(bias))
        cycles = int(np.prod(x.shape[:-1])) * out_channels * terms * length
        return values, cycles


class EslConvertBackend(EslRawBackend):
    """ESL 백엔드 (변환 포함): 커널 행 부분합마다 P2B → B2P 후 누산"""

    name = 'esl-convert'

    def _reduce(self, products, src, row_size):
        groups = [products[i:i + row_size] for i in range(0, len(products), row_size)]
        if len(groups) == 1:
            return super()._reduce(products, src, row_size)

        converted = []
        for g, group in enumerate(groups):
            key = src.derive(g)
            partial = group[0] if len(group) == 1 else esl_array_add(group, self.strategy, key.derive(0))
            raw = esl_to_binary_raw(partial, self.fmt, key.derive(1))
            converted.append(esl_encode(self.fmt.to_real(raw), self.sn_exponent, key.derive(2), key.derive(3)))
        return esl_array_add(converted, self.strategy, src.derive(len(groups)))


def make_backend(name: str, int_bits: int = 2, frac_bits: int = 6, sn_exponent: int = 9,
                 source_kind: SourceKind = SourceKind.LFSR,
                 clock_periods: Optional[dict] = None) -> ArithmeticBackend:
    """
    이름으로 백엔드 생성

    Args:
        name: float, fixed, bisc, esl-raw, esl-convert
        clock_periods: 백엔드별 임계 경로 지연 재정의 (ns)

    Returns:
        ArithmeticBackend
    """
    periods = clock_periods or {}
    if name == 'float':
        return FloatBackend()
    if name == 'fixed':
        return FixedBackend(int_bits, frac_bits)
    if name == 'bisc':
        return BiscBackend(int_bits, frac_bits, clock_period_ns=periods.get('bisc'))
    if name == 'esl-raw':
        return EslRawBackend(sn_exponent, int_bits, frac_bits, source_kind,
                             clock_period_ns=periods.get('esl-raw'))
    if name == 'esl-convert':
        return EslConvertBackend(sn_exponent, int_bits, frac_bits, source_kind,
                                 clock_period_ns=periods.get('esl-convert'))
    raise ConfigError(f"알 수 없는 백엔드: {name} (사용 가능: {', '.join(BACKEND_NAMES)})")
