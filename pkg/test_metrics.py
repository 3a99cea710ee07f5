"""
SCBench 프로젝트 - 오차 스윕/비교 리포트 테스트
"""

import json
import math
import os

import numpy as np
import pandas as pd
import pytest

from src.accelerator.latency import REPORTED_SYNTHESIS, CycleReport
from src.accelerator.processing_unit import PuConfig
from src.metrics.error_analysis import (
    Experiment, SweepSpec, esl_histogram, load_sweep_spec, rmse, run_sweep,
)
from src.metrics.report import COMPARISON_COLUMNS, comparison_report
from src.utils.errors import MissingBackendError, SweepSpecError

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'configs')


# ===== RMSE =====

def test_rmse():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(np.sqrt(12.5))
    with pytest.raises(ValueError):
        rmse([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        rmse([], [])


# ===== 명세 =====

def test_sweep_spec_defaults():
    spec = SweepSpec('sng-error')
    assert spec.experiment is Experiment.SNG_ERROR
    assert spec.sn_exponents == tuple(range(6, 14))
    assert spec.input_range == (-4.0, 4.0)
    assert len(spec.grid()) == 17


def test_mul_grid_excludes_upper_bound():
    grid = SweepSpec('mul-error').grid()
    assert len(grid) == 8
    assert grid[0] == -4.0 and grid[-1] < 3.0


@pytest.mark.parametrize('kwargs', [
    dict(experiment='bogus'),
    dict(experiment='sng-error', trials=0),
    dict(experiment='sng-error', sn_exponents=(17,)),
    dict(experiment='sng-error', input_range=(1.0, -1.0)),
    dict(experiment='array-adder', fan_ins=(1, 2)),
    dict(experiment='array-adder', strategies=('diagonal',)),
])
def test_sweep_spec_validation(kwargs):
    with pytest.raises(SweepSpecError):
        SweepSpec(**kwargs)


def test_spec_hash_is_stable():
    a = SweepSpec('p2b-error', trials=10)
    assert a.spec_hash() == SweepSpec('p2b-error', trials=10).spec_hash()
    assert a.spec_hash() != SweepSpec('p2b-error', trials=11).spec_hash()


def test_load_sweep_spec(tmp_path):
    spec = load_sweep_spec(os.path.join(CONFIG_DIR, 'sweep_sng.env'))
    assert spec.sn_exponents == tuple(range(6, 14))
    assert spec.trials == 1000
    assert load_sweep_spec(os.path.join(CONFIG_DIR, 'sweep_sng.env'), seed=5).seed == 5

    missing = tmp_path / 'missing.env'
    missing.write_text('TRIALS=10\n')
    with pytest.raises(SweepSpecError):
        load_sweep_spec(str(missing))

    unknown = tmp_path / 'unknown.env'
    unknown.write_text('EXPERIMENT=noise-floor\n')
    with pytest.raises(SweepSpecError):
        load_sweep_spec(str(unknown))


# ===== 스윕 =====

@pytest.fixture(scope='module')
def sng_report():
    return run_sweep(SweepSpec('sng-error', sn_exponents=(6, 13), trials=200))


def test_sng_error_shrinks_with_length(sng_report):
    frame = sng_report.to_frame()
    assert len(frame) == 2 * 17
    for value in frame['value'].unique():
        short = sng_report.rmse_at(sn_exponent=6, value=value)
        long = sng_report.rmse_at(sn_exponent=13, value=value)
        assert long <= short
        if abs(value) != 1.0:
            assert long < short


def test_sng_error_larger_outside_unit_range(sng_report):
    frame = sng_report.to_frame()
    short = frame[frame['sn_exponent'] == 6]
    inside = short[short['value'].abs() < 1.0]['rmse'].mean()
    outside = short[short['value'].abs() > 1.0]['rmse'].mean()
    assert outside > inside


def test_sweep_metadata(sng_report):
    meta = sng_report.metadata
    assert meta['experiment'] == 'sng-error'
    assert meta['trials'] == 200
    assert meta['spec_hash'] == SweepSpec('sng-error', sn_exponents=(6, 13), trials=200).spec_hash()


def test_rmse_at_requires_single_row(sng_report):
    with pytest.raises(KeyError):
        sng_report.rmse_at(sn_exponent=6)


def test_sweep_independent_of_jobs():
    spec = SweepSpec('sng-error', sn_exponents=(6,), grid_points=5, trials=50, seed=11)
    assert run_sweep(spec, jobs=1).rows == run_sweep(spec, jobs=2).rows


def test_p2b_error_is_flat_in_length():
    report = run_sweep(SweepSpec('p2b-error', sn_exponents=(11, 13), grid_points=5, trials=100))
    for value in report.to_frame()['value'].unique():
        ratio = report.rmse_at(sn_exponent=11, value=value) / report.rmse_at(sn_exponent=13, value=value)
        assert 0.5 <= ratio <= 2.0


def test_mul_sweep_rows():
    report = run_sweep(SweepSpec('mul-error', sn_exponents=(12,), grid_points=4, trials=20))
    frame = report.to_frame()
    assert list(frame.columns) == ['sn_exponent', 'length', 'a', 'b', 'rmse', 'trials']
    assert len(frame) == 16
    assert np.isfinite(frame['rmse']).all()
    assert (frame['length'] == 4096).all()


def test_array_adder_sweep():
    spec = SweepSpec('array-adder', sn_exponents=(10,), fan_ins=(2, 8), trials=1000)
    report = run_sweep(spec)
    assert len(report.rows) == 6

    def at(strategy, fan_in):
        return report.rmse_at(strategy=strategy, fan_in=fan_in)

    assert at('tree', 8) < at('sequential', 8)
    assert at('tree', 8) < at('flat', 8)
    assert at('tree', 2) < at('tree', 8)
    # 트리 오차 ≈ 스트림 잡음 1/32 × fan_in
    assert at('tree', 8) < 0.5
    assert set(report.metadata['ranking']) == {'2', '8'}
    assert report.metadata['ranking_holds'] is True


@pytest.mark.slow
def test_array_adder_ranking_at_wide_fan_in():
    """fan-in 8, 16, 32 모두 트리 구조가 가장 정확"""
    spec = SweepSpec('array-adder', sn_exponents=(10,), fan_ins=(8, 16, 32), trials=1000)
    report = run_sweep(spec)
    for fan_in in (8, 16, 32):
        tree = report.rmse_at(strategy='tree', fan_in=fan_in)
        assert tree < report.rmse_at(strategy='sequential', fan_in=fan_in)
        assert tree < report.rmse_at(strategy='flat', fan_in=fan_in)
    assert report.metadata['ranking_holds'] is True


def test_esl_histogram():
    rows = esl_histogram(2)
    frequencies = [row['frequency'] for row in rows]
    # Y=0(1이 2개) 패턴 6개를 뺀 10 × 16 쌍
    assert sum(frequencies) == 160
    assert len(set(frequencies)) > 1
    ratios = [row['ratio'] for row in rows]
    assert ratios == sorted(ratios)
    assert 2.0 in ratios and -2.0 in ratios
    with pytest.raises(SweepSpecError):
        esl_histogram(5)


def test_esl_histogram_counts_length_16_by_binomials():
    rows = esl_histogram(4)
    by_ratio = {row['ratio']: row['frequency'] for row in rows}
    # X 2^16개 × (Y 2^16개 - 1이 8개인 Y)
    assert sum(by_ratio.values()) == (1 << 16) * ((1 << 16) - math.comb(16, 8))
    assert all(by_ratio[r] == by_ratio[-r] for r in by_ratio if r != 0)


def test_report_write(tmp_path):
    report = run_sweep(SweepSpec('esl-histogram'))
    csv_path, json_path = report.write(str(tmp_path))
    assert os.path.basename(csv_path) == 'esl-histogram.csv'
    assert len(pd.read_csv(csv_path)) == len(report.rows)
    with open(json_path, encoding='utf-8') as f:
        payload = json.load(f)
    assert payload['metadata']['experiment'] == 'esl-histogram'


# ===== 비교 리포트 =====

def test_comparison_with_reported_cycles():
    cycles = {name: {'total_cycles': value} for name, value in REPORTED_SYNTHESIS['total_cycles'].items()}
    report = comparison_report(cycles, accuracies={'bisc': 0.9, 'esl-raw': 0.2, 'esl-convert': 0.8, 'float': 0.95})
    assert report.speedup('bisc') == pytest.approx(1.0)
    assert report.speedup('esl-raw') == pytest.approx(47.6, rel=0.01)
    assert report.speedup('esl-convert') == pytest.approx(50.6, rel=0.01)
    assert report.row('esl-raw')['accuracy_vs_bisc'] == pytest.approx(0.2 / 0.9)
    assert report.row('esl-convert')['time_vs_esl_convert'] == pytest.approx(1.0)
    assert report.metadata['esl_footprint_ratio'] == pytest.approx(113.78, abs=0.01)
    assert report.metadata['extra_accuracies'] == {'float': 0.95}
    assert list(report.to_frame().columns) == COMPARISON_COLUMNS


def test_identical_backends_give_unit_ratios():
    same = {name: CycleReport(name, total_cycles=1000, clock_period_ns=2.0)
            for name in ('bisc', 'esl-raw', 'esl-convert')}
    report = comparison_report(same, accuracies={name: 0.5 for name in same})
    for name in same:
        assert report.speedup(name) == pytest.approx(1.0)
        assert report.row(name)['accuracy_vs_bisc'] == pytest.approx(1.0)


def test_footprint_per_backend():
    cycles = {name: {'total_cycles': 1} for name in ('bisc', 'esl-raw', 'esl-convert')}
    report = comparison_report(cycles, pu_config=PuConfig.reference())
    assert report.row('esl-raw')['buffer_entry_bits'] == 128
    assert report.row('bisc')['footprint_vs_binary'] == 1.0
    assert report.row('esl-convert')['accuracy'] is None


def test_missing_backend():
    with pytest.raises(MissingBackendError):
        comparison_report({'bisc': {'total_cycles': 1}, 'esl-raw': {'total_cycles': 1}})
    report = comparison_report({name: {'total_cycles': 1} for name in ('bisc', 'esl-raw', 'esl-convert')})
    with pytest.raises(KeyError):
        report.row('fixed')


def test_comparison_write(tmp_path):
    cycles = {name: {'total_cycles': 10} for name in ('bisc', 'esl-raw', 'esl-convert')}
    csv_path, json_path = comparison_report(cycles).write(str(tmp_path))
    frame = pd.read_csv(csv_path)
    assert list(frame['backend']) == ['bisc', 'esl-raw', 'esl-convert']
    assert os.path.exists(json_path)
