"""
SCBench 프로젝트 - 사이클/지연 시간 모델
사이클 수 × 임계 경로 지연으로 평가 시간을 추정하고 합성 보고 상수를 보관
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Union

from src.utils.config import DEFAULT_CLOCK_PERIODS_NS

logger = logging.getLogger(__name__)


class Backend(Enum):
    """가속기 백엔드 구성"""
    BISC = 'bisc'
    ESL_RAW = 'esl-raw'
    ESL_CONVERT = 'esl-convert'


# 45nm 합성 보고 값 (추정 대상이 아닌 문서화된 상수)
REPORTED_SYNTHESIS = {
    'power_mw': {'bisc': 7.519, 'esl-raw': 36.308, 'esl-convert': 13.98},
    'area': {'bisc': 3.637e-2, 'esl-raw': 2.089e-1, 'esl-convert': 1.075e-1},
    # BISC 대비 배수 (보고서 본문 수치)
    'power_ratio': {'esl-raw': 7.82, 'esl-convert': 1.85},
    'area_ratio': {'esl-raw': 5.7, 'esl-convert': 2.9},
    # LeNet-5 1000장 평가의 보고 사이클 수
    'total_cycles': {'bisc': 7.01e6, 'esl-raw': 2.08e8, 'esl-convert': 2.08e8},
}


@dataclass
class CycleReport:
    """
    백엔드 실행의 사이클/버퍼 집계

    total_cycles는 단일 PE 모델(BISC: Σ|x_raw|, ESL: MAC 수 × 2^N),
    pu_cycles는 PU 단위 반복 사이클의 합이다.
    """
    backend: str
    total_cycles: int = 0
    pu_cycles: int = 0
    mac_ops: int = 0
    clock_period_ns: float = 0.0
    layer_cycles: Dict[str, int] = field(default_factory=dict)
    buffer_bits: int = 0
    buffer_traffic_bits: int = 0

    @property
    def evaluation_time_s(self) -> float:
        return self.total_cycles * self.clock_period_ns * 1e-9

    def merge(self, other: 'CycleReport') -> 'CycleReport':
        """두 리포트 합산 (버퍼 크기는 최댓값)"""
        if other.backend != self.backend:
            raise ValueError(f"다른 백엔드 리포트는 합칠 수 없습니다: {self.backend} != {other.backend}")
        layers = dict(self.layer_cycles)
        for name, cycles in other.layer_cycles.items():
            layers[name] = layers.get(name, 0) + cycles
        return CycleReport(
            backend=self.backend,
            total_cycles=self.total_cycles + other.total_cycles,
            pu_cycles=self.pu_cycles + other.pu_cycles,
            mac_ops=self.mac_ops + other.mac_ops,
            clock_period_ns=self.clock_period_ns or other.clock_period_ns,
            layer_cycles=layers,
            buffer_bits=max(self.buffer_bits, other.buffer_bits),
            buffer_traffic_bits=self.buffer_traffic_bits + other.buffer_traffic_bits,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'backend': self.backend,
            'total_cycles': self.total_cycles,
            'pu_cycles': self.pu_cycles,
            'mac_ops': self.mac_ops,
            'clock_period_ns': self.clock_period_ns,
            'evaluation_time_s': self.evaluation_time_s,
            'layer_cycles': dict(self.layer_cycles),
            'buffer_bits': self.buffer_bits,
            'buffer_traffic_bits': self.buffer_traffic_bits,
        }


def default_clock_period(backend: Union[Backend, str]) -> float:
    """백엔드의 기본 임계 경로 지연 (ns)"""
    name = backend.value if isinstance(backend, Backend) else str(backend)
    if name not in DEFAULT_CLOCK_PERIODS_NS:
        raise KeyError(f"알 수 없는 백엔드: {name}")
    return DEFAULT_CLOCK_PERIODS_NS[name]


def esl_cycles(mac_ops: int, sn_exponent: int) -> int:
    """ESL 사이클 모델: MAC 수 × 스트림 길이"""
    return mac_ops * (1 << sn_exponent)


def latency_estimate(backend: Union[Backend, str], model_stats: Union[CycleReport, Mapping, int],
                     clock_period: Optional[float] = None) -> float:
    """
    평가 시간 추정

    Args:
        backend: 백엔드
        model_stats: CycleReport, {'total_cycles': ...} 매핑 또는 사이클 수
        clock_period: 임계 경로 지연 (ns), 생략 시 백엔드 기본값

    Returns:
        평가 시간 (초)
    """
    if isinstance(model_stats, CycleReport):
        cycles = model_stats.total_cycles
    elif isinstance(model_stats, Mapping):
        cycles = model_stats['total_cycles']
    else:
        cycles = model_stats

    period = clock_period if clock_period is not None else default_clock_period(backend)
    seconds = float(cycles) * period * 1e-9
    logger.debug(f"지연 추정: backend={backend}, cycles={cycles}, period={period}ns -> {seconds:.3e}s")
    return seconds
