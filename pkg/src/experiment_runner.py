"""
SCBench 프로젝트 - 실험 실행기
설정, 데이터셋, 가중치, 백엔드, 스윕, 리포트를 묶어 재현 가능한 실행으로 기록하는 메인 클래스
"""

import hashlib
import json
import os
import time
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from src.accelerator.latency import REPORTED_SYNTHESIS, CycleReport
from src.accelerator.processing_unit import PuConfig, load_pu_config
from src.arithmetic.bitstream import (
    RandomSource, SourceKind, StreamFormat, decode, sng_encode,
)
from src.database.manager import DatabaseManager
from src.ingestion.mnist import load_mnist, locate_mnist
from src.ingestion.weights import export_container, import_weights, load_model
from src.metrics.error_analysis import load_sweep_spec, run_sweep
from src.metrics.report import REQUIRED_BACKENDS, comparison_report
from src.nn.backends import make_backend
from src.nn.lenet import build_synthetic_model, synthetic_inputs
from src.nn.model import Dataset, ModelWeights, PoolKind, evaluate_accuracy
from src.utils.config import config
from src.utils.errors import ConfigError, ScbenchError

MANIFEST_NAME = 'manifest.json'


def file_sha256(path: str) -> str:
    """파일 SHA-256 hex"""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 20), b''):
            digest.update(block)
    return digest.hexdigest()


class ExperimentRunner:
    """SCBench 실험 실행기 (실행마다 매니페스트와 DB 기록을 남김)"""

    def __init__(self, db_path: Optional[str] = None):
        """
        실행기 초기화

        Args:
            db_path: 실행 기록 DB 경로 (기본은 DATABASE_PATH 설정)
        """
        self.logger = config.setup_logging()

        self.sim_config = config.simulator
        self.runtime_config = config.runtime

        self.db_manager = DatabaseManager(
            db_path=db_path or config.get_full_path(config.database.path)
        )

        self.logger.info("SCBench 실험 실행기 초기화 완료")

    # ===== 공통 =====

    def _backend(self, name: str, sn_exponent: Optional[int] = None,
                 source_kind: Optional[str] = None):
        sim = self.sim_config
        return make_backend(
            name,
            int_bits=sim.int_bits,
            frac_bits=sim.frac_bits,
            sn_exponent=sn_exponent or sim.sn_exponent,
            source_kind=SourceKind(source_kind or sim.source_kind),
            clock_periods=sim.clock_periods_ns,
        )

    def _load_inputs(self, weights_path: Optional[str], mnist_dir: Optional[str], limit: int,
                     normalization: str, pool: PoolKind, seed: int):
        """실제 가중치/MNIST 또는 합성 모델/입력"""
        if weights_path is None and mnist_dir is None:
            self.logger.info(f"가중치 경로가 없어 합성 모델 사용: {limit}개 입력")
            return build_synthetic_model(seed), synthetic_inputs(limit, seed=seed, model_seed=seed)
        if weights_path is None or mnist_dir is None:
            raise ConfigError("--weights와 --mnist-dir는 함께 지정해야 합니다")

        model = load_model(weights_path, pool=pool)
        images_path, labels_path = locate_mnist(mnist_dir)
        dataset = load_mnist(images_path, labels_path, limit=limit, mode=normalization)
        return model, dataset

    def _record(self, command: str, start_time: float, out_dir: Optional[str], artifacts: Sequence[str],
                seed: int, jobs: int = 1, config_path: Optional[str] = None, backend: Optional[str] = None,
                spec_hash: Optional[str] = None, options: Optional[Dict[str, Any]] = None,
                error: Optional[Exception] = None) -> Dict[str, Any]:
        """매니페스트 작성과 실행 기록 저장"""
        execution_time = time.time() - start_time
        manifest = {
            'command': command,
            'config_path': config_path,
            'seed': seed,
            'jobs': jobs,
            'backend': backend,
            'out_dir': out_dir,
            'spec_hash': spec_hash,
            'options': options or {},
            'artifacts': [
                {'path': os.path.basename(path), 'sha256': file_sha256(path),
                 'kind': os.path.splitext(path)[1].lstrip('.') or 'bin'}
                for path in artifacts
            ],
        }
        if out_dir and error is None:
            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, MANIFEST_NAME), 'w', encoding='utf-8') as f:
                json.dump(manifest, f, ensure_ascii=False, indent=2, sort_keys=True)

        self.db_manager.save_run({
            **manifest,
            'success': error is None,
            'error_message': str(error) if error else '',
            'execution_time': execution_time,
        })
        return {
            'success': error is None,
            'artifacts': manifest['artifacts'],
            'execution_time': execution_time,
        }

    def _failure(self, command: str, start_time: float, error: Exception, seed: int,
                 **kwargs) -> Dict[str, Any]:
        self.logger.error(f"{command} 실행 중 오류 발생: {error}")
        result = self._record(command, start_time, kwargs.pop('out_dir', None), [], seed,
                              error=error, **kwargs)
        result['error'] = str(error)
        result['exit_code'] = error.exit_code if isinstance(error, ScbenchError) else 1
        return result

    # ===== 서브커맨드 =====

    def encode_demo(self, value: float, fmt: str = 'bipolar', exponent: int = 6, seed: int = 0,
                    source_kind: str = 'full-period') -> Dict[str, Any]:
        """
        SNG 인코딩/디코딩 시연

        Returns:
            bits 문자열, popcount, 디코딩 값이 담긴 결과
        """
        start_time = time.time()
        try:
            stream = sng_encode(value, StreamFormat(fmt), exponent, RandomSource(SourceKind(source_kind), seed))
            bits = ''.join(str(int(b)) for b in stream.bits)
            result = {
                'success': True,
                'value': value,
                'format': fmt,
                'length': stream.length,
                'bits': bits,
                'popcount': int(stream.popcount()),
                'decoded': float(decode(stream)),
                'execution_time': time.time() - start_time,
            }
            self.logger.info(f"인코딩 시연: v={value}, {fmt}, 길이={stream.length}, 디코딩={result['decoded']}")
            return result
        except (ScbenchError, ValueError) as e:
            self.logger.error(f"인코딩 시연 실패: {e}")
            return {
                'success': False,
                'error': str(e),
                'exit_code': e.exit_code if isinstance(e, ScbenchError) else ConfigError.exit_code,
                'execution_time': time.time() - start_time,
            }

    def run_lenet(self, backend: str, out_dir: str, seed: int, weights_path: Optional[str] = None,
                  mnist_dir: Optional[str] = None, limit: int = 1000, sn_exponent: Optional[int] = None,
                  jobs: int = 1, normalization: str = 'unit', pool: str = 'max',
                  config_path: Optional[str] = None) -> Dict[str, Any]:
        """
        LeNet-5(또는 합성 모델) 정확도와 사이클 집계

        Returns:
            accuracy, cycles, 산출물 목록이 담긴 결과
        """
        start_time = time.time()
        options = {'weights': weights_path, 'mnist_dir': mnist_dir, 'limit': limit,
                   'sn_exponent': sn_exponent, 'normalization': normalization, 'pool': pool}
        try:
            self.logger.info(f"LeNet 평가 시작: backend={backend}, limit={limit}, seed={seed}")
            model, dataset = self._load_inputs(weights_path, mnist_dir, limit, normalization, PoolKind(pool), seed)
            engine = self._backend(backend, sn_exponent)
            accuracy, report = evaluate_accuracy(model, dataset, engine, seed=seed, jobs=jobs)
            artifacts = self._write_lenet_outputs(out_dir, backend, model, dataset, accuracy, report, seed)

            recorded = self._record('lenet', start_time, out_dir, artifacts, seed, jobs, config_path,
                                    backend, options=options)
            result = {**recorded, 'accuracy': accuracy, 'images': len(dataset), 'report': report}
            self.logger.info(
                f"LeNet 평가 완료: backend={backend}, accuracy={accuracy:.4f}, "
                f"cycles={report.total_cycles}, 시간={result['execution_time']:.2f}초"
            )
            return result
        except (ScbenchError, OSError) as e:
            return self._failure('lenet', start_time, e, seed, jobs=jobs, config_path=config_path,
                                 backend=backend, options=options, out_dir=out_dir)

    def _write_lenet_outputs(self, out_dir: str, backend: str, model: ModelWeights, dataset: Dataset,
                             accuracy: float, report: CycleReport, seed: int) -> List[str]:
        os.makedirs(out_dir, exist_ok=True)
        accuracy_path = os.path.join(out_dir, f'accuracy_{backend}.json')
        cycles_path = os.path.join(out_dir, f'cycles_{backend}.csv')
        with open(accuracy_path, 'w', encoding='utf-8') as f:
            json.dump({
                'metadata': {'model': model.name, 'seed': seed, 'images': len(dataset)},
                'backend': backend,
                'accuracy': accuracy,
                'cycles': report.to_dict(),
            }, f, ensure_ascii=False, indent=2)

        rows = [{'layer': name, 'cycles': cycles} for name, cycles in report.layer_cycles.items()]
        rows.append({'layer': 'total', 'cycles': report.total_cycles})
        pd.DataFrame(rows, columns=['layer', 'cycles']).to_csv(cycles_path, index=False)
        return [accuracy_path, cycles_path]

    def run_sweep(self, spec_path: str, out_dir: str, seed: Optional[int] = None,
                  jobs: int = 1) -> Dict[str, Any]:
        """
        오차 스윕 실행

        Args:
            spec_path: 스윕 명세 파일
            seed: 지정 시 명세의 SEED를 재정의

        Returns:
            rows 수와 산출물 목록이 담긴 결과
        """
        start_time = time.time()
        run_seed = seed if seed is not None else self.runtime_config.seed
        try:
            spec = load_sweep_spec(spec_path, seed=seed)
            run_seed = spec.seed
            self.logger.info(f"스윕 시작: {spec.experiment.value}, seed={spec.seed}, jobs={jobs}")
            report = run_sweep(spec, jobs=jobs)
            artifacts = list(report.write(out_dir))

            recorded = self._record('sweep', start_time, out_dir, artifacts, spec.seed, jobs, spec_path,
                                    spec_hash=spec.spec_hash(), options=spec.to_dict())
            result = {**recorded, 'experiment': spec.experiment.value, 'rows': len(report.rows),
                      'metadata': report.metadata}
            self.logger.info(f"스윕 완료: {len(report.rows)}행, 시간={result['execution_time']:.2f}초")
            return result
        except (ScbenchError, OSError) as e:
            return self._failure('sweep', start_time, e, run_seed, jobs=jobs, config_path=spec_path,
                                 out_dir=out_dir)

    def run_compare(self, out_dir: str, seed: int, weights_path: Optional[str] = None,
                    mnist_dir: Optional[str] = None, limit: int = 1000, sn_exponent: Optional[int] = None,
                    jobs: int = 1, reported: bool = False, pu_config_path: Optional[str] = None,
                    normalization: str = 'unit', pool: str = 'max') -> Dict[str, Any]:
        """
        BISC / ESL-raw / ESL-convert 비교

        Args:
            reported: True면 평가 없이 보고된 사이클 수로 지연 비율만 계산

        Returns:
            speedups, accuracies, 산출물 목록이 담긴 결과
        """
        start_time = time.time()
        options = {'weights': weights_path, 'mnist_dir': mnist_dir, 'limit': limit,
                   'sn_exponent': sn_exponent, 'reported': reported}
        try:
            pu_config = load_pu_config(pu_config_path) if pu_config_path else PuConfig.lenet()
            accuracies: Dict[str, float] = {}
            if reported:
                cycle_reports = {
                    name: {'total_cycles': REPORTED_SYNTHESIS['total_cycles'][name],
                           'clock_period_ns': self.sim_config.clock_periods_ns[name]}
                    for name in REQUIRED_BACKENDS
                }
            else:
                model, dataset = self._load_inputs(weights_path, mnist_dir, limit, normalization,
                                                   PoolKind(pool), seed)
                cycle_reports = {}
                for name in ('float',) + REQUIRED_BACKENDS:
                    accuracy, report = evaluate_accuracy(model, dataset, self._backend(name, sn_exponent),
                                                         seed=seed, jobs=jobs)
                    accuracies[name] = accuracy
                    if name in REQUIRED_BACKENDS:
                        cycle_reports[name] = report

            comparison = comparison_report(cycle_reports, accuracies, pu_config)
            artifacts = list(comparison.write(out_dir))
            recorded = self._record('compare', start_time, out_dir, artifacts, seed, jobs, pu_config_path,
                                    options=options)
            return {
                **recorded,
                'speedups': {name: comparison.speedup(name) for name in REQUIRED_BACKENDS},
                'accuracies': accuracies,
                'footprint_ratio': comparison.metadata['esl_footprint_ratio'],
            }
        except (ScbenchError, OSError) as e:
            return self._failure('compare', start_time, e, seed, jobs=jobs, config_path=pu_config_path,
                                 options=options, out_dir=out_dir)

    def import_weights(self, source_path: str, out_path: str, pool: str = 'max') -> Dict[str, Any]:
        """
        외부 가중치를 컨테이너로 변환

        Returns:
            레이어 표, 체크섬, 산출물 목록이 담긴 결과
        """
        start_time = time.time()
        out_dir = os.path.dirname(out_path) or '.'
        try:
            model = import_weights(source_path, pool=PoolKind(pool))
            checksum = export_container(model, out_path)
            recorded = self._record('import-weights', start_time, out_dir, [out_path], 0,
                                    config_path=source_path, spec_hash=checksum,
                                    options={'source': source_path, 'pool': pool})
            return {
                **recorded,
                'checksum': checksum,
                'layers': [f'{l.name}:{l.kind.value}' for l in model.layers],
                'mac_count': model.mac_count(),
            }
        except (ScbenchError, OSError) as e:
            return self._failure('import-weights', start_time, e, 0, config_path=source_path,
                                 out_dir=out_dir)

    def get_database_statistics(self) -> Dict[str, Any]:
        """실행 기록 통계"""
        return self.db_manager.get_statistics()

    def close(self):
        """리소스 정리"""
        try:
            if hasattr(self, 'db_manager'):
                self.db_manager.close()
            self.logger.info("SCBench 실험 실행기 리소스 정리 완료")
        except Exception as e:
            self.logger.error(f"리소스 정리 중 오류: {e}")

    def __enter__(self):
        """컨텍스트 매니저 진입"""
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """컨텍스트 매니저 종료"""
        self.close()
