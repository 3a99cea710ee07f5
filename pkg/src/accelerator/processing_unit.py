"""
SCBench 프로젝트 - 가중치 고정(weight-stationary) 처리 유닛 모델
PE 행 간 부분합 전달, 부분 결과 버퍼, 백엔드별(BISC/ESL-raw/ESL-convert) PE 연산
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.accelerator.latency import Backend, CycleReport, default_clock_period, esl_cycles
from src.arithmetic.bisc import MacImpl, bisc_product_counts, product_scale
from src.arithmetic.bitstream import RandomSource, SourceKind
from src.arithmetic.esl import (
    Add2Variant, esl_add2, esl_encode, esl_mul, esl_to_binary_raw,
)
from src.arithmetic.numeric import FixedPointFormat
from src.utils.config import parse_int_list, read_key_value_file
from src.utils.errors import ComputeError, ConfigError, ShapeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PuConfig:
    """처리 유닛 구성"""
    kernel_w: int = 2
    kernel_h: int = 2
    input_w: int = 4
    input_h: int = 4
    in_channels: int = 3
    out_channels: int = 4
    int_bits: int = 0
    frac_bits: int = 5
    sn_exponent: int = 6
    backend: Backend = Backend.BISC
    clock_period_ns: Optional[float] = None
    mac_impl: MacImpl = MacImpl.INPUT_COUNTED
    source_kind: SourceKind = SourceKind.LFSR

    def __post_init__(self):
        for name, enum_type in (('backend', Backend), ('mac_impl', MacImpl), ('source_kind', SourceKind)):
            value = getattr(self, name)
            if not isinstance(value, enum_type):
                object.__setattr__(self, name, enum_type(value))
        for name in ('kernel_w', 'kernel_h', 'input_w', 'input_h', 'in_channels', 'out_channels'):
            if getattr(self, name) < 1:
                raise ConfigError(f"PU 구성 값은 1 이상이어야 합니다: {name}={getattr(self, name)}")
        if not 1 <= self.sn_exponent <= 16:
            raise ConfigError(f"스트림 지수 범위 밖: {self.sn_exponent}")
        if self.clock_period_ns is None:
            object.__setattr__(self, 'clock_period_ns', default_clock_period(self.backend))

    @classmethod
    def reference(cls, backend: Backend = Backend.BISC) -> 'PuConfig':
        """합성 비교용 구성: 이진 폭 6, SC 폭 64, 커널 2×2, 입력 4×4, 채널 3→4"""
        return cls(backend=Backend(backend))

    @classmethod
    def lenet(cls, backend: Backend = Backend.BISC) -> 'PuConfig':
        """LeNet-5 실행 구성: 9비트 이진(2,6), 2^9 스트림"""
        return cls(kernel_w=5, kernel_h=5, input_w=32, input_h=32, in_channels=1, out_channels=6,
                   int_bits=2, frac_bits=6, sn_exponent=9, backend=Backend(backend))

    @property
    def binary_width(self) -> int:
        return 1 + self.int_bits + self.frac_bits

    @property
    def sn_length(self) -> int:
        return 1 << self.sn_exponent

    @property
    def fixed_format(self) -> FixedPointFormat:
        return FixedPointFormat(self.int_bits, self.frac_bits)

    @property
    def output_h(self) -> int:
        return self.input_h - self.kernel_h + 1

    @property
    def output_w(self) -> int:
        return self.input_w - self.kernel_w + 1

    def with_layer(self, in_channels: int, out_channels: int, kernel_h: int, kernel_w: int,
                   input_h: int, input_w: int) -> 'PuConfig':
        """같은 수 체계/백엔드로 레이어 차원만 바꾼 구성"""
        return replace(self, in_channels=in_channels, out_channels=out_channels,
                       kernel_h=kernel_h, kernel_w=kernel_w, input_h=input_h, input_w=input_w)


_PU_CONFIG_SCHEMA = {
    'KERNEL': lambda raw: parse_int_list(raw),
    'KERNEL_W': int,
    'KERNEL_H': int,
    'INPUT_W': int,
    'INPUT_H': int,
    'IN_CHANNELS': int,
    'OUT_CHANNELS': int,
    'INT_BITS': int,
    'FRAC_BITS': int,
    'SN_EXPONENT': int,
    'BACKEND': Backend,
    'CLOCK_PERIOD_NS': float,
    'MAC_IMPL': MacImpl,
    'SOURCE_KIND': SourceKind,
}


def load_pu_config(path: str) -> PuConfig:
    """
    키-값 파일에서 PU 구성 읽기

    Args:
        path: dotenv 형식 파일 (KERNEL_W=2, BACKEND=bisc 등)

    Returns:
        PuConfig (파일에 없는 키는 기준 구성 값)
    """
    values = read_key_value_file(path, _PU_CONFIG_SCHEMA)
    kwargs: Dict[str, Any] = {}
    if 'KERNEL' in values:
        dims = values.pop('KERNEL')
        if len(dims) not in (1, 2):
            raise ConfigError(f"KERNEL 값은 'h' 또는 'h,w' 형식이어야 합니다: {dims}")
        kwargs['kernel_h'], kwargs['kernel_w'] = dims[0], dims[-1]
    for key, value in values.items():
        kwargs[key.lower()] = value
    return PuConfig(**kwargs)


def buffer_entry_bits(cfg: PuConfig) -> int:
    """부분 결과 버퍼 엔트리 폭: ESL-raw는 두 스트림(2 × 2^N), 나머지는 이진 폭"""
    if cfg.backend is Backend.ESL_RAW:
        return 2 * cfg.sn_length
    return cfg.binary_width


def footprint_ratio(cfg: PuConfig) -> float:
    """ESL-raw 엔트리 대비 이진 엔트리 저장 공간 배수"""
    return 2 * cfg.sn_length / cfg.binary_width


# ===== 스케줄 =====

class PeSource(Enum):
    CONST_ZERO = 'const-zero'
    PREV_PE = 'prev-pe'


class PeSink(Enum):
    NEXT_PE = 'next-pe'
    BUFFER = 'buffer'
    OUTPUT = 'output'


@dataclass(frozen=True)
class PeAssignment:
    """PE 하나에 배정된 가중치 위치와 부분합 입출력"""
    row: int
    index: int
    source: PeSource
    sink: PeSink
    reads_buffer: bool


@dataclass(frozen=True)
class ConvPlan:
    """컨볼루션 데이터플로 계획"""
    config: PuConfig
    assignments: Tuple[PeAssignment, ...]
    reuse_distance: int
    output_h: int
    output_w: int

    def sink_for(self, pe: PeAssignment, channel: int) -> PeSink:
        """마지막 행의 출력은 마지막 입력 채널에서만 OUTPUT, 그 전에는 버퍼로"""
        if pe.sink is PeSink.OUTPUT and channel < self.config.in_channels - 1:
            return PeSink.BUFFER
        return pe.sink

    def reads_buffer(self, pe: PeAssignment, channel: int) -> bool:
        return pe.reads_buffer or (channel > 0 and pe.row == 0 and pe.index == self.config.kernel_w - 1)


def schedule_conv(cfg: PuConfig) -> ConvPlan:
    """
    커널의 각 가중치를 전용 PE에 배정

    행 안에서 PE i의 부분합은 매 사이클 PE i+1로 전달되고, 행의 마지막 PE는
    이전 행이 정확히 input_w 사이클 전에 버퍼에 쓴 부분합을 더해 다시 버퍼에
    쓰거나(중간 행) 출력으로 내보낸다(마지막 행).
    """
    if cfg.kernel_h > cfg.input_h or cfg.kernel_w > cfg.input_w:
        raise ShapeError(
            f"커널이 입력보다 큽니다: kernel={cfg.kernel_h}x{cfg.kernel_w}, input={cfg.input_h}x{cfg.input_w}"
        )

    assignments = []
    for r in range(cfg.kernel_h):
        for i in range(cfg.kernel_w):
            last_pe = i == cfg.kernel_w - 1
            if not last_pe:
                sink = PeSink.NEXT_PE
            elif r == cfg.kernel_h - 1:
                sink = PeSink.OUTPUT
            else:
                sink = PeSink.BUFFER
            assignments.append(PeAssignment(
                row=r,
                index=i,
                source=PeSource.CONST_ZERO if i == 0 else PeSource.PREV_PE,
                sink=sink,
                reads_buffer=last_pe and r > 0,
            ))
    return ConvPlan(cfg, tuple(assignments), cfg.input_w, cfg.output_h, cfg.output_w)


# ===== 부분 결과 버퍼 =====

class PartialResultBuffer:
    """출력 픽셀 주소로 접근하는 부분합 버퍼 (읽으면 비워짐)"""

    def __init__(self, entry_bits: int):
        self.entry_bits = entry_bits
        self._entries: Dict[Tuple[int, int], Any] = {}
        self.writes = 0
        self.reads = 0
        self.peak_depth = 0

    def write(self, address: Tuple[int, int], value: Any):
        if address in self._entries:
            raise ComputeError(f"읽히지 않은 부분합을 덮어씁니다: {address}")
        self._entries[address] = value
        self.writes += 1
        self.peak_depth = max(self.peak_depth, len(self._entries))

    def read(self, address: Tuple[int, int]) -> Any:
        if address not in self._entries:
            raise ComputeError(f"버퍼에 없는 부분합을 읽습니다: {address}")
        self.reads += 1
        return self._entries.pop(address)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def traffic_bits(self) -> int:
        return (self.writes + self.reads) * self.entry_bits

    @property
    def footprint_bits(self) -> int:
        return self.peak_depth * self.entry_bits


# ===== PE 연산 =====

class PeArithmetic(ABC):
    """PE 한 개의 수 체계별 연산 묶음"""

    def __init__(self, cfg: PuConfig):
        self.cfg = cfg
        self.fmt = cfg.fixed_format

    @abstractmethod
    def product(self, x_raw: int, w_raw: int, src: RandomSource) -> Any:
        """입력 × 가중치"""

    @abstractmethod
    def accumulate(self, partial: Any, value: Any, src: RandomSource) -> Any:
        """부분합 + 값"""

    def to_buffer(self, partial: Any, src: RandomSource) -> Any:
        return partial

    def from_buffer(self, entry: Any, src: RandomSource) -> Any:
        return entry

    @abstractmethod
    def finish(self, partial: Any, src: RandomSource) -> float:
        """출력 이진 인터페이스 값 (실수)"""

    def mac_cycles(self, x_raw: int, w_raw: int) -> int:
        return self.cfg.sn_length


class BiscPe(PeArithmetic):
    """BISC PE: 정수 업/다운 카운트 누산"""

    def __init__(self, cfg: PuConfig):
        super().__init__(cfg)
        self.exponent = cfg.int_bits + cfg.frac_bits

    def product(self, x_raw, w_raw, src):
        if self.cfg.mac_impl is MacImpl.INPUT_COUNTED:
            return int(bisc_product_counts(np.int64(x_raw), np.int64(w_raw), self.exponent))
        return int(bisc_product_counts(np.int64(w_raw), np.int64(x_raw), self.exponent))

    def accumulate(self, partial, value, src):
        return partial + value

    def finish(self, partial, src):
        return partial * product_scale(self.cfg.int_bits, self.cfg.frac_bits)

    def mac_cycles(self, x_raw, w_raw):
        limit = (1 << self.exponent) - 1
        counted = x_raw if self.cfg.mac_impl is MacImpl.INPUT_COUNTED else w_raw
        return min(abs(int(counted)), limit)


class EslRawPe(PeArithmetic):
    """ESL PE (변환 없음): 버퍼에 (X, Y) 스트림 쌍을 저장"""

    def _encode(self, raw: int, src: RandomSource):
        return esl_encode(raw / self.fmt.scale, self.cfg.sn_exponent, src.derive(0), src.derive(1))

    def product(self, x_raw, w_raw, src):
        return esl_mul(self._encode(x_raw, src.derive(0)), self._encode(w_raw, src.derive(1)))

    def accumulate(self, partial, value, src):
        return esl_add2(partial, value, Add2Variant.HALF_CONST, src.derive(2))

    def finish(self, partial, src):
        raw = esl_to_binary_raw(partial, self.fmt, src.derive(3))
        return float(self.fmt.to_real(raw))


class EslConvertPe(EslRawPe):
    """ESL PE (변환 포함): 버퍼 경계마다 P2B/B2P, 버퍼에는 이진 값 저장"""

    def to_buffer(self, partial, src):
        return int(esl_to_binary_raw(partial, self.fmt, src.derive(4)))

    def from_buffer(self, entry, src):
        return self._encode(entry, src.derive(5))


def make_pe_arithmetic(cfg: PuConfig) -> PeArithmetic:
    if cfg.backend is Backend.BISC:
        return BiscPe(cfg)
    if cfg.backend is Backend.ESL_RAW:
        return EslRawPe(cfg)
    return EslConvertPe(cfg)


# ===== 레이어 실행 =====

def _check_layer(cfg: PuConfig, weights: np.ndarray, inputs: np.ndarray):
    expected_w = (cfg.out_channels, cfg.in_channels, cfg.kernel_h, cfg.kernel_w)
    expected_x = (cfg.in_channels, cfg.input_h, cfg.input_w)
    if weights.shape != expected_w:
        raise ShapeError(f"가중치 형상 불일치: {weights.shape} != {expected_w}")
    if inputs.shape != expected_x:
        raise ShapeError(f"입력 형상 불일치: {inputs.shape} != {expected_x}")


def _root_source(cfg: PuConfig, seed: int, layer: int) -> RandomSource:
    return RandomSource(cfg.source_kind, seed).derive(layer)


def _pu_cycles(cfg: PuConfig, arith: PeArithmetic, x_raw: np.ndarray, w_raw: np.ndarray) -> int:
    """입력 픽셀마다 모든 출력 채널 PU가 동시에 한 반복을 수행하는 PU 수준 사이클"""
    total = 0
    for ic in range(cfg.in_channels):
        for y in range(cfg.input_h):
            for x in range(cfg.input_w):
                longest = 0
                for r in range(cfg.kernel_h):
                    for i in range(cfg.kernel_w):
                        if not (0 <= y - r < cfg.output_h and 0 <= x - i < cfg.output_w):
                            continue
                        for oc in range(cfg.out_channels):
                            longest = max(longest, arith.mac_cycles(x_raw[ic, y, x], w_raw[oc, ic, r, i]))
                total += longest
    return total


def run_conv_layer(cfg: PuConfig, weights: np.ndarray, inputs: np.ndarray,
                   bias: Optional[np.ndarray] = None, seed: int = 0,
                   layer: int = 0) -> Tuple[np.ndarray, CycleReport]:
    """
    데이터플로 순서로 컨볼루션 레이어 실행 (사이클 단위 트랜잭션 모델)

    Args:
        cfg: PU 구성 (레이어 차원 포함)
        weights: (out, in, kh, kw) 실수 가중치
        inputs: (in, h, w) 실수 입력
        bias: (out,) 편향, 출력 이진 인터페이스에서 더함
        seed: 마스터 시드
        layer: 레이어 번호 (시드 파생 키)

    Returns:
        (out, oh, ow) 출력과 CycleReport
    """
    weights = np.asarray(weights, dtype=np.float64)
    inputs = np.asarray(inputs, dtype=np.float64)
    _check_layer(cfg, weights, inputs)

    plan = schedule_conv(cfg)
    fmt = cfg.fixed_format
    x_raw = fmt.quantize_raw(inputs)
    w_raw = fmt.quantize_raw(weights)
    arith = make_pe_arithmetic(cfg)
    root = _root_source(cfg, seed, layer)
    last_pe = cfg.kernel_w - 1

    output = np.zeros((cfg.out_channels, plan.output_h, plan.output_w), dtype=np.float64)
    mac_ops = 0
    single_pe_cycles = 0
    peak_bits = 0
    traffic_bits = 0

    for oc in range(cfg.out_channels):
        buffer = PartialResultBuffer(buffer_entry_bits(cfg))
        for ic in range(cfg.in_channels):
            registers: Dict[Tuple[int, int], Any] = {}
            for y in range(cfg.input_h):
                for x in range(cfg.input_w):
                    latched = {}
                    for pe in plan.assignments:
                        r, i = pe.row, pe.index
                        oy, ox = y - r, x - i
                        if not (0 <= oy < plan.output_h and 0 <= ox < plan.output_w):
                            continue
                        src = root.derive(oc, ic, r, i, oy, ox)
                        xv, wv = int(x_raw[ic, y, x]), int(w_raw[oc, ic, r, i])
                        value = arith.product(xv, wv, src)
                        mac_ops += 1
                        single_pe_cycles += arith.mac_cycles(xv, wv)

                        if pe.source is PeSource.PREV_PE:
                            value = arith.accumulate(registers[(r, i - 1)], value, src)

                        if i != last_pe:
                            latched[(r, i)] = value
                            continue

                        if plan.reads_buffer(pe, ic):
                            buffered = arith.from_buffer(buffer.read((oy, ox)), src)
                            value = arith.accumulate(value, buffered, src.derive(7))

                        if plan.sink_for(pe, ic) is PeSink.OUTPUT:
                            output[oc, oy, ox] = arith.finish(value, src)
                        else:
                            buffer.write((oy, ox), arith.to_buffer(value, src))
                    registers = latched

        if len(buffer):
            raise ComputeError(f"레이어 종료 후 버퍼에 부분합이 남았습니다: {len(buffer)}개")
        peak_bits = max(peak_bits, buffer.footprint_bits)
        traffic_bits += buffer.traffic_bits

    if bias is not None:
        output += fmt.round_trip(np.asarray(bias, dtype=np.float64)).reshape(-1, 1, 1)

    report = CycleReport(
        backend=cfg.backend.value,
        total_cycles=single_pe_cycles if cfg.backend is Backend.BISC else esl_cycles(mac_ops, cfg.sn_exponent),
        pu_cycles=_pu_cycles(cfg, arith, x_raw, w_raw),
        mac_ops=mac_ops,
        clock_period_ns=cfg.clock_period_ns,
        layer_cycles={f'conv{layer}': 0},
        buffer_bits=peak_bits,
        buffer_traffic_bits=traffic_bits,
    )
    report.layer_cycles[f'conv{layer}'] = report.total_cycles
    logger.debug(
        f"conv{layer} 실행 완료: backend={cfg.backend.value}, mac={mac_ops}, "
        f"cycles={report.total_cycles}, buffer_bits={peak_bits}"
    )
    return output, report


def evaluate_conv_direct(cfg: PuConfig, weights: np.ndarray, inputs: np.ndarray,
                         bias: Optional[np.ndarray] = None, seed: int = 0, layer: int = 0) -> np.ndarray:
    """
    출력 픽셀 단위 직접 평가 (데이터플로 검증용 기준)

    데이터플로와 같은 누산 순서(입력 채널 → 커널 행 → 행 내 PE)와 같은 시드 키를 쓴다.
    """
    weights = np.asarray(weights, dtype=np.float64)
    inputs = np.asarray(inputs, dtype=np.float64)
    _check_layer(cfg, weights, inputs)

    fmt = cfg.fixed_format
    x_raw = fmt.quantize_raw(inputs)
    w_raw = fmt.quantize_raw(weights)
    arith = make_pe_arithmetic(cfg)
    root = _root_source(cfg, seed, layer)
    last_pe = cfg.kernel_w - 1
    last_row = cfg.kernel_h - 1

    output = np.zeros((cfg.out_channels, cfg.output_h, cfg.output_w), dtype=np.float64)
    for oc in range(cfg.out_channels):
        for oy in range(cfg.output_h):
            for ox in range(cfg.output_w):
                entry = None
                for ic in range(cfg.in_channels):
                    for r in range(cfg.kernel_h):
                        partial = None
                        for i in range(cfg.kernel_w):
                            src = root.derive(oc, ic, r, i, oy, ox)
                            xv, wv = int(x_raw[ic, oy + r, ox + i]), int(w_raw[oc, ic, r, i])
                            value = arith.product(xv, wv, src)
                            partial = value if partial is None else arith.accumulate(partial, value, src)

                        src = root.derive(oc, ic, r, last_pe, oy, ox)
                        if entry is not None:
                            partial = arith.accumulate(partial, arith.from_buffer(entry, src), src.derive(7))
                        if r == last_row and ic == cfg.in_channels - 1:
                            output[oc, oy, ox] = arith.finish(partial, src)
                        else:
                            entry = arith.to_buffer(partial, src)

    if bias is not None:
        output += fmt.round_trip(np.asarray(bias, dtype=np.float64)).reshape(-1, 1, 1)
    return output
