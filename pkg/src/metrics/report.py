"""
SCBench 프로젝트 - 백엔드 비교 리포트
평가 시간 정규화, 정확도 표, 메모리 점유 비율을 CSV + JSON으로 정리
"""

import json
import logging
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import pandas as pd

from src.accelerator.latency import REPORTED_SYNTHESIS, Backend, CycleReport, default_clock_period, latency_estimate
from src.accelerator.processing_unit import PuConfig, buffer_entry_bits, footprint_ratio
from src.utils.errors import MissingBackendError

logger = logging.getLogger(__name__)

REQUIRED_BACKENDS = tuple(b.value for b in Backend)
COMPARISON_COLUMNS = [
    'backend', 'total_cycles', 'clock_period_ns', 'evaluation_time_s',
    'speedup_vs_bisc', 'time_vs_esl_convert', 'accuracy', 'accuracy_vs_bisc',
    'buffer_entry_bits', 'footprint_vs_binary', 'reported_power_mw', 'reported_area',
]

CycleInput = Union[CycleReport, Mapping[str, Any]]


def _as_cycle_report(name: str, value: CycleInput) -> CycleReport:
    if isinstance(value, CycleReport):
        return value
    return CycleReport(
        backend=name,
        total_cycles=int(value['total_cycles']),
        clock_period_ns=float(value.get('clock_period_ns') or default_clock_period(name)),
    )


def _ratio(numerator: Optional[float], denominator: Optional[float]) -> Optional[float]:
    if numerator is None or denominator in (None, 0):
        return None
    return numerator / denominator


@dataclass
class ComparisonReport:
    """세 백엔드 비교 결과"""
    rows: List[Dict[str, Any]]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def row(self, backend: str) -> Dict[str, Any]:
        for row in self.rows:
            if row['backend'] == backend:
                return row
        raise MissingBackendError(backend)

    def speedup(self, backend: str) -> float:
        """BISC 대비 해당 백엔드의 평가 시간 배수"""
        return self.row(backend)['speedup_vs_bisc']

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=COMPARISON_COLUMNS)

    def write(self, out_dir: str, stem: str = 'comparison') -> Tuple[str, str]:
        """CSV + JSON 저장, (csv 경로, json 경로) 반환"""
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, f'{stem}.csv')
        json_path = os.path.join(out_dir, f'{stem}.json')
        self.to_frame().to_csv(csv_path, index=False, float_format='%.10g')
        with open(json_path, 'w', encoding='utf-8') as f:
            json.dump({'metadata': self.metadata, 'rows': self.rows}, f, ensure_ascii=False, indent=2)
        logger.info(f"비교 리포트 저장: {csv_path}")
        return csv_path, json_path


def comparison_report(cycle_reports: Mapping[str, CycleInput],
                      accuracies: Optional[Mapping[str, float]] = None,
                      pu_config: Optional[PuConfig] = None) -> ComparisonReport:
    """
    BISC / ESL-raw / ESL-convert 비교 리포트 생성

    평가 시간은 사이클 수 × 임계 경로 지연이다. speedup_vs_bisc는 백엔드 시간 / BISC 시간,
    time_vs_esl_convert는 ESL-convert 기준 정규화 시간, accuracy_vs_bisc는 BISC 기준 정확도다.

    Args:
        cycle_reports: 백엔드 이름 -> CycleReport (또는 total_cycles/clock_period_ns 매핑)
        accuracies: 백엔드 이름 -> 정확도 (선택)
        pu_config: 메모리 점유 비율 계산용 PU 구성 (기본 PuConfig.lenet())

    Returns:
        ComparisonReport
    """
    missing = [name for name in REQUIRED_BACKENDS if name not in cycle_reports]
    if missing:
        raise MissingBackendError(f"비교에 필요한 백엔드 결과가 없습니다: {', '.join(missing)}")

    accuracies = dict(accuracies or {})
    pu_config = pu_config or PuConfig.lenet()
    reports = {name: _as_cycle_report(name, cycle_reports[name]) for name in REQUIRED_BACKENDS}

    times = {
        name: latency_estimate(name, report, report.clock_period_ns or None)
        for name, report in reports.items()
    }
    binary_bits = pu_config.binary_width

    rows = []
    for name, report in reports.items():
        backend_cfg = replace(pu_config, backend=Backend(name), clock_period_ns=None)
        entry_bits = buffer_entry_bits(backend_cfg)
        rows.append({
            'backend': name,
            'total_cycles': report.total_cycles,
            'clock_period_ns': report.clock_period_ns,
            'evaluation_time_s': times[name],
            'speedup_vs_bisc': _ratio(times[name], times['bisc']),
            'time_vs_esl_convert': _ratio(times[name], times['esl-convert']),
            'accuracy': accuracies.get(name),
            'accuracy_vs_bisc': _ratio(accuracies.get(name), accuracies.get('bisc')),
            'buffer_entry_bits': entry_bits,
            'footprint_vs_binary': entry_bits / binary_bits,
            'reported_power_mw': REPORTED_SYNTHESIS['power_mw'][name],
            'reported_area': REPORTED_SYNTHESIS['area'][name],
        })

    metadata = {
        'pu_config': {
            'kernel': [pu_config.kernel_h, pu_config.kernel_w],
            'int_bits': pu_config.int_bits,
            'frac_bits': pu_config.frac_bits,
            'sn_exponent': pu_config.sn_exponent,
        },
        'esl_footprint_ratio': footprint_ratio(pu_config),
        'reported_power_ratio': dict(REPORTED_SYNTHESIS['power_ratio']),
        'reported_area_ratio': dict(REPORTED_SYNTHESIS['area_ratio']),
        'extra_accuracies': {k: v for k, v in accuracies.items() if k not in REQUIRED_BACKENDS},
        'timestamp': datetime.now(timezone.utc).isoformat(),
    }
    report = ComparisonReport(rows, metadata)
    logger.info(
        f"비교 리포트: esl-raw {report.speedup('esl-raw'):.1f}x, "
        f"esl-convert {report.speedup('esl-convert'):.1f}x, "
        f"footprint {metadata['esl_footprint_ratio']:.1f}x"
    )
    return report
