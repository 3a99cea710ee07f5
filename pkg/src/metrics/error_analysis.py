"""
SCBench 프로젝트 - 오차 분석 스윕
SNG/P2B/곱셈/배열 덧셈 RMSE 스윕과 ESL 값 분포 히스토그램
"""

import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.arithmetic.bitstream import RandomSource, SourceKind
from src.arithmetic.esl import (
    ArrayStrategy, esl_array_add, esl_decode_ideal, esl_encode, esl_mul, esl_to_binary_raw,
)
from src.arithmetic.numeric import FixedPointFormat
from src.utils.config import parse_float_pair, parse_int_list, read_key_value_file
from src.utils.errors import SweepSpecError

logger = logging.getLogger(__name__)

# 한 번에 만드는 스트림 비트 상한 (trials × 길이)
TRIAL_CHUNK_BITS = 1 << 22

class Experiment(Enum):
    SNG_ERROR = 'sng-error'
    P2B_ERROR = 'p2b-error'
    MUL_ERROR = 'mul-error'
    ARRAY_ADDER = 'array-adder'
    ESL_HISTOGRAM = 'esl-histogram'


REPORT_COLUMNS = {
    Experiment.SNG_ERROR: ['sn_exponent', 'length', 'value', 'rmse', 'trials'],
    Experiment.P2B_ERROR: ['sn_exponent', 'length', 'value', 'rmse', 'trials'],
    Experiment.MUL_ERROR: ['sn_exponent', 'length', 'a', 'b', 'rmse', 'trials'],
    Experiment.ARRAY_ADDER: ['strategy', 'sn_exponent', 'length', 'fan_in', 'rmse', 'trials'],
    Experiment.ESL_HISTOGRAM: ['ratio', 'frequency'],
}

_DEFAULTS = {
    Experiment.SNG_ERROR: dict(sn_exponents=tuple(range(6, 14)), input_range=(-4.0, 4.0), grid_points=17),
    Experiment.P2B_ERROR: dict(sn_exponents=tuple(range(9, 14)), input_range=(-1.0, 1.0), grid_points=9),
    Experiment.MUL_ERROR: dict(sn_exponents=tuple(range(12, 17)), input_range=(-4.0, 3.0), grid_points=8),
    Experiment.ARRAY_ADDER: dict(sn_exponents=(10,), input_range=(-0.25, 0.25), grid_points=1),
    Experiment.ESL_HISTOGRAM: dict(sn_exponents=(2,), input_range=(-1.0, 1.0), grid_points=1),
}


def rmse(estimates, truths) -> float:
    """
    평균 제곱근 오차

    Args:
        estimates: 추정값 목록
        truths: 참값 목록 (같은 길이)

    Returns:
        sqrt(mean((estimates - truths)^2))
    """
    est = np.asarray(estimates, dtype=np.float64).ravel()
    tru = np.asarray(truths, dtype=np.float64).ravel()
    if est.shape != tru.shape:
        raise ValueError(f"길이 불일치: {est.size} != {tru.size}")
    if est.size == 0:
        raise ValueError("빈 입력으로는 RMSE를 계산할 수 없습니다")
    return float(np.sqrt(np.mean((est - tru) ** 2)))


@dataclass(frozen=True)
class SweepSpec:
    """오차 스윕 명세"""
    experiment: Experiment
    sn_exponents: Tuple[int, ...] = ()
    input_range: Tuple[float, float] = ()
    grid_points: int = 0
    trials: int = 1000
    seed: int = 2024
    source_kind: SourceKind = SourceKind.UNIFORM
    strategies: Tuple[ArrayStrategy, ...] = (ArrayStrategy.TREE, ArrayStrategy.SEQUENTIAL, ArrayStrategy.FLAT)
    fan_ins: Tuple[int, ...] = (2, 4, 8, 16, 32)

    def __post_init__(self):
        try:
            experiment = Experiment(self.experiment)
            source_kind = SourceKind(self.source_kind)
            strategies = tuple(ArrayStrategy(s) for s in self.strategies)
        except ValueError as e:
            raise SweepSpecError(f"스윕 명세 값 오류: {e}") from e
        object.__setattr__(self, 'experiment', experiment)
        object.__setattr__(self, 'source_kind', source_kind)
        object.__setattr__(self, 'strategies', strategies)

        defaults = _DEFAULTS[experiment]
        for name in ('sn_exponents', 'input_range', 'grid_points'):
            if not getattr(self, name):
                object.__setattr__(self, name, defaults[name])
        object.__setattr__(self, 'sn_exponents', tuple(int(n) for n in self.sn_exponents))
        object.__setattr__(self, 'input_range', tuple(float(v) for v in self.input_range))
        object.__setattr__(self, 'fan_ins', tuple(int(f) for f in self.fan_ins))

        if self.trials < 1:
            raise SweepSpecError(f"trials는 1 이상이어야 합니다: {self.trials}")
        if self.grid_points < 1:
            raise SweepSpecError(f"grid_points는 1 이상이어야 합니다: {self.grid_points}")
        if not self.sn_exponents or any(not 1 <= n <= 16 for n in self.sn_exponents):
            raise SweepSpecError(f"sn_exponents 범위 오류: {self.sn_exponents}")
        lo, hi = self.input_range
        if not lo < hi:
            raise SweepSpecError(f"input_range가 비어 있습니다: {self.input_range}")
        if experiment is Experiment.ARRAY_ADDER and (not self.fan_ins or min(self.fan_ins) < 2):
            raise SweepSpecError(f"fan_ins는 2 이상이어야 합니다: {self.fan_ins}")
        if experiment is Experiment.ARRAY_ADDER and not self.strategies:
            raise SweepSpecError("strategies가 비어 있습니다")

    def grid(self) -> np.ndarray:
        """입력 균등 격자 (MUL_ERROR는 상한 제외 [lo, hi))"""
        lo, hi = self.input_range
        if self.grid_points == 1:
            return np.array([(lo + hi) / 2])
        endpoint = self.experiment is not Experiment.MUL_ERROR
        return np.linspace(lo, hi, self.grid_points, endpoint=endpoint)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'experiment': self.experiment.value,
            'sn_exponents': list(self.sn_exponents),
            'input_range': list(self.input_range),
            'grid_points': self.grid_points,
            'trials': self.trials,
            'seed': self.seed,
            'source_kind': self.source_kind.value,
            'strategies': [s.value for s in self.strategies],
            'fan_ins': list(self.fan_ins),
        }

    def spec_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


_SWEEP_SCHEMA = {
    'EXPERIMENT': str,
    'SN_EXPONENTS': parse_int_list,
    'INPUT_RANGE': parse_float_pair,
    'GRID_POINTS': int,
    'TRIALS': int,
    'SEED': int,
    'SOURCE_KIND': str,
    'STRATEGIES': lambda raw: tuple(part.strip() for part in raw.split(',') if part.strip()),
    'FAN_INS': parse_int_list,
}


def load_sweep_spec(path: str, seed: Optional[int] = None) -> SweepSpec:
    """
    키-값 파일에서 스윕 명세 읽기

    Args:
        path: dotenv 형식 명세 파일
        seed: 지정 시 파일의 SEED보다 우선

    Returns:
        SweepSpec
    """
    values = read_key_value_file(path, _SWEEP_SCHEMA)
    if 'EXPERIMENT' not in values:
        raise SweepSpecError(f"EXPERIMENT 키가 없습니다: {path}")
    kwargs = {key.lower(): value for key, value in values.items()}
    if seed is not None:
        kwargs['seed'] = seed
    return SweepSpec(**kwargs)


@dataclass
class ErrorReport:
    """스윕 결과 표와 메타데이터"""
    experiment: Experiment
    rows: List[Dict[str, Any]]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=REPORT_COLUMNS[self.experiment])

    def rmse_at(self, **filters) -> float:
        """조건에 맞는 행의 RMSE (정확히 한 행)"""
        frame = self.to_frame()
        for key, value in filters.items():
            frame = frame[frame[key] == value]
        if len(frame) != 1:
            raise KeyError(f"조건에 맞는 행이 {len(frame)}개입니다: {filters}")
        return float(frame['rmse'].iloc[0])

    def write(self, out_dir: str, stem: Optional[str] = None) -> Tuple[str, str]:
        """
        CSV + JSON 저장

        Returns:
            (csv 경로, json 경로)
        """
        os.makedirs(out_dir, exist_ok=True)
        stem = stem or self.experiment.value
        csv_path = os.path.join(out_dir, f'{stem}.csv')
        json_path = os.path.join(out_dir, f'{stem}.json')

        frame = self.to_frame()
        frame.to_csv(csv_path, index=False, float_format='%.10g')
        with open(json_path, 'w', encoding='utf-8') as f:
            json.dump({'metadata': self.metadata, 'rows': frame.to_dict(orient='records')},
                      f, ensure_ascii=False, indent=2)
        logger.info(f"오차 리포트 저장: {csv_path} ({len(frame)}행)")
        return csv_path, json_path


# ===== 격자점 평가 =====

def _point_source(spec: SweepSpec, index: int) -> RandomSource:
    """격자점마다 독립 시드 (병렬도와 무관)"""
    return RandomSource(spec.source_kind, spec.seed).derive(index)


def _trial_chunks(trials: int, length: int):
    size = max(1, TRIAL_CHUNK_BITS // length)
    for start in range(0, trials, size):
        yield start // size, min(size, trials - start)


def _sng_point(spec: SweepSpec, index: int, exponent: int, value: float) -> Dict[str, Any]:
    src = _point_source(spec, index)
    limit = 2 * max(abs(v) for v in spec.input_range)
    estimates = []
    for c, count in _trial_chunks(spec.trials, 1 << exponent):
        key = src.derive(c)
        e = esl_encode(np.full(count, value), exponent, key.derive(0), key.derive(1))
        estimates.append(esl_decode_ideal(e, limit=limit))
    return {'sn_exponent': exponent, 'length': 1 << exponent, 'value': value,
            'rmse': rmse(np.concatenate(estimates), np.full(spec.trials, value)), 'trials': spec.trials}


def _p2b_point(spec: SweepSpec, index: int, exponent: int, value: float) -> Dict[str, Any]:
    src = _point_source(spec, index)
    fmt = FixedPointFormat()
    estimates = []
    for c, count in _trial_chunks(spec.trials, 1 << exponent):
        key = src.derive(c)
        e = esl_encode(np.full(count, value), exponent, key.derive(0), key.derive(1))
        estimates.append(fmt.to_real(esl_to_binary_raw(e, fmt, key.derive(2))))
    return {'sn_exponent': exponent, 'length': 1 << exponent, 'value': value,
            'rmse': rmse(np.concatenate(estimates), np.full(spec.trials, value)), 'trials': spec.trials}


def _mul_point(spec: SweepSpec, index: int, exponent: int, a: float, b: float) -> Dict[str, Any]:
    src = _point_source(spec, index)
    limit = max(abs(v) for v in spec.input_range) ** 2
    estimates = []
    for c, count in _trial_chunks(spec.trials, 1 << exponent):
        key = src.derive(c)
        ea = esl_encode(np.full(count, a), exponent, key.derive(0), key.derive(1))
        eb = esl_encode(np.full(count, b), exponent, key.derive(2), key.derive(3))
        estimates.append(esl_decode_ideal(esl_mul(ea, eb), limit=limit))
    return {'sn_exponent': exponent, 'length': 1 << exponent, 'a': a, 'b': b,
            'rmse': rmse(np.concatenate(estimates), np.full(spec.trials, a * b)), 'trials': spec.trials}


def _array_point(spec: SweepSpec, index: int, strategy: ArrayStrategy, exponent: int,
                 fan_in: int) -> Dict[str, Any]:
    src = _point_source(spec, index)
    lo, hi = spec.input_range
    # 참값이 가질 수 있는 합의 상한에서만 추정값을 자른다
    limit = fan_in * max(abs(lo), abs(hi))
    estimates, truths = [], []
    for c, count in _trial_chunks(spec.trials, (1 << exponent) * fan_in):
        key = src.derive(c)
        # 항 값은 전략과 무관하게 (지수, fan_in, 청크)로 정해짐
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(exponent, fan_in, c)))
        values = rng.uniform(lo, hi, size=(fan_in, count))
        terms = [esl_encode(values[i], exponent, key.derive(i, 0), key.derive(i, 1)) for i in range(fan_in)]
        total = esl_array_add(terms, strategy, key.derive(fan_in, 0))
        estimates.append(esl_decode_ideal(total, limit=limit))
        truths.append(values.sum(axis=0))
    return {'strategy': strategy.value, 'sn_exponent': exponent, 'length': 1 << exponent,
            'fan_in': fan_in, 'rmse': rmse(np.concatenate(estimates), np.concatenate(truths)),
            'trials': spec.trials}


def esl_histogram(exponent: int = 2) -> List[Dict[str, Any]]:
    """
    길이 2^N 스트림 쌍 전체에서 X/Y 비율 값의 빈도

    모든 (X, Y) 비트 패턴 쌍을 나열하고 Y가 0이 아닌 쌍의 비율을 센다.
    """
    length = 1 << exponent
    if length > 16:
        raise SweepSpecError(f"히스토그램은 길이 16 이하에서만 전수 나열합니다: {length}")
    # 길이 L 패턴 중 1의 개수가 k인 패턴 수 = C(L, k)
    counts = np.array([math.comb(length, k) for k in range(length + 1)])
    values = 2.0 * np.arange(length + 1) / length - 1.0

    freq: Dict[float, int] = {}
    for kx, vx in enumerate(values):
        for ky, vy in enumerate(values):
            if vy == 0:
                continue
            ratio = round(vx / vy, 12)
            freq[ratio] = freq.get(ratio, 0) + int(counts[kx] * counts[ky])
    return [{'ratio': r, 'frequency': freq[r]} for r in sorted(freq)]


def _work_items(spec: SweepSpec) -> List[Tuple]:
    items = []
    grid = spec.grid()
    if spec.experiment in (Experiment.SNG_ERROR, Experiment.P2B_ERROR):
        for n in spec.sn_exponents:
            for v in grid:
                items.append((n, float(v)))
    elif spec.experiment is Experiment.MUL_ERROR:
        for n in spec.sn_exponents:
            for a in grid:
                for b in grid:
                    items.append((n, float(a), float(b)))
    elif spec.experiment is Experiment.ARRAY_ADDER:
        for s in spec.strategies:
            for n in spec.sn_exponents:
                for f in spec.fan_ins:
                    items.append((s, n, f))
    return items


_EVALUATORS = {
    Experiment.SNG_ERROR: _sng_point,
    Experiment.P2B_ERROR: _p2b_point,
    Experiment.MUL_ERROR: _mul_point,
    Experiment.ARRAY_ADDER: _array_point,
}


def _evaluate(args) -> Dict[str, Any]:
    spec, index, item = args
    return _EVALUATORS[spec.experiment](spec, index, *item)


def array_adder_ranking(report: ErrorReport) -> Dict[int, Dict[str, Any]]:
    """fan_in별 전략 RMSE와 트리 구조가 가장 정확한지 여부"""
    frame = report.to_frame()
    ranking = {}
    for (fan_in, exponent), group in frame.groupby(['fan_in', 'sn_exponent']):
        by_strategy = dict(zip(group['strategy'], group['rmse']))
        tree = by_strategy.get(ArrayStrategy.TREE.value)
        others = [v for k, v in by_strategy.items() if k != ArrayStrategy.TREE.value]
        ranking[int(fan_in)] = {
            'sn_exponent': int(exponent),
            'rmse': by_strategy,
            'tree_best': tree is not None and all(tree <= v for v in others),
        }
    return ranking


def run_sweep(spec: SweepSpec, jobs: int = 1) -> ErrorReport:
    """
    스윕 실행

    Args:
        spec: 스윕 명세
        jobs: 병렬 작업자 수 (결과는 jobs와 무관)

    Returns:
        ErrorReport
    """
    if not isinstance(spec.experiment, Experiment):
        raise SweepSpecError(f"알 수 없는 실험: {spec.experiment}")

    start_time = time.time()
    if spec.experiment is Experiment.ESL_HISTOGRAM:
        rows = esl_histogram(spec.sn_exponents[0])
    else:
        work = [(spec, index, item) for index, item in enumerate(_work_items(spec))]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(_evaluate, work))
        else:
            rows = [_evaluate(w) for w in work]

    metadata = {
        'experiment': spec.experiment.value,
        'seed': spec.seed,
        'trials': spec.trials,
        'grid_points': spec.grid_points,
        'source_kind': spec.source_kind.value,
        'spec': spec.to_dict(),
        'spec_hash': spec.spec_hash(),
        'timestamp': datetime.now(timezone.utc).isoformat(),
    }
    report = ErrorReport(spec.experiment, rows, metadata)
    if spec.experiment is Experiment.ARRAY_ADDER:
        ranking = array_adder_ranking(report)
        metadata['ranking'] = {str(k): v for k, v in ranking.items()}
        metadata['ranking_holds'] = all(v['tree_best'] for k, v in ranking.items() if k >= 8)

    logger.info(
        f"스윕 완료: {spec.experiment.value}, {len(rows)}개 점, "
        f"소요 시간 {time.time() - start_time:.2f}초"
    )
    return report
