"""
SCBench 프로젝트 - 메인 실행 파일
Stochastic Computing Benchmark (BISC-MVM vs ESL 가속기 비교)
"""

import os
import sys
import argparse
from datetime import datetime
from typing import Any, Dict, Optional

# 프로젝트 루트를 Python 경로에 추가
project_root = os.path.dirname(os.path.abspath(__file__))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from src.experiment_runner import ExperimentRunner  # noqa: E402
from src.nn.backends import BACKEND_NAMES  # noqa: E402
from src.utils.config import config, read_key_value_file  # noqa: E402
from src.utils.errors import ConfigError, ScbenchError  # noqa: E402

EXIT_INTERRUPTED = 130

# --config 파일 키 -> 인수 이름
RUN_CONFIG_SCHEMA = {
    'SEED': int,
    'JOBS': int,
    'BACKEND': str,
    'SN_EXPONENT': int,
    'OUT_DIR': str,
    'WEIGHTS': str,
    'MNIST_DIR': str,
    'LIMIT': int,
    'NORMALIZATION': str,
    'POOL': str,
    'PU_CONFIG': str,
}


def build_parser() -> argparse.ArgumentParser:
    """명령행 인수 정의"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, help='실행 설정 파일 (dotenv 형식, 인수가 우선)')
    common.add_argument('--seed', type=int, help='마스터 시드 (기본: SCBENCH_SEED)')
    common.add_argument('--jobs', '-j', type=int, help='병렬 작업자 수 (기본: 1)')
    common.add_argument('--out-dir', '-o', type=str, help='출력 디렉토리 (기본: SCBENCH_OUT_DIR)')

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument('--weights', '-w', type=str, help='가중치 파일 (컨테이너, LeNet 덤프, .npz)')
    data.add_argument('--mnist-dir', '-m', type=str, help='MNIST t10k IDX 파일 디렉토리')
    data.add_argument('--limit', '-n', type=int, help='평가 이미지 수 (기본: 1000)')
    data.add_argument('--sn-exp', type=int, help='ESL 스트림 지수 N (길이 2^N)')
    data.add_argument('--normalization', choices=['unit', 'standardize'], help='입력 정규화 방식')
    data.add_argument('--pool', choices=['max', 'average'], help='풀링 종류')

    parser = argparse.ArgumentParser(description='SCBench 확률 컴퓨팅 가속기 비교 시스템')
    sub = parser.add_subparsers(dest='command')

    demo = sub.add_parser('encode-demo', parents=[common], help='SNG 인코딩/디코딩 시연')
    demo.add_argument('value', type=float, help='인코딩할 값')
    demo.add_argument('--format', '-f', default='bipolar', choices=['unipolar', 'bipolar', 'inverted-bipolar'])
    demo.add_argument('--exponent', '-e', type=int, default=6, help='스트림 지수 N (기본: 6)')
    demo.add_argument('--source', default='full-period', choices=['lfsr', 'full-period', 'uniform'])

    lenet = sub.add_parser('lenet', parents=[common, data], help='LeNet-5 정확도/사이클 평가')
    lenet.add_argument('--backend', '-b', choices=BACKEND_NAMES, help='연산 백엔드')

    sweep = sub.add_parser('sweep', parents=[common], help='오차 스윕 실행')
    sweep.add_argument('spec', type=str, help='스윕 명세 파일')

    compare = sub.add_parser('compare', parents=[common, data], help='세 가속기 비교 리포트')
    compare.add_argument('--reported', action='store_true', help='보고된 사이클 수로 지연 비율만 계산')
    compare.add_argument('--pu-config', type=str, help='PU 구성 파일 (메모리 점유 비율용)')

    imp = sub.add_parser('import-weights', parents=[common], help='가중치를 컨테이너로 변환')
    imp.add_argument('source', type=str, help='LeNet 덤프 또는 .npz')
    imp.add_argument('--output', type=str, help='컨테이너 경로 (기본: <out-dir>/weights.scnw)')
    imp.add_argument('--pool', choices=['max', 'average'], default='max')

    sub.add_parser('stats', parents=[common], help='실행 기록 통계')
    return parser


def resolve_options(args: argparse.Namespace) -> Dict[str, Any]:
    """인수 > 설정 파일 > 환경변수 > 기본값 순으로 실행 옵션 결정"""
    file_values: Dict[str, Any] = {}
    if getattr(args, 'config', None):
        file_values = {k.lower(): v for k, v in read_key_value_file(args.config, RUN_CONFIG_SCHEMA).items()}

    runtime = config.runtime
    defaults = {
        'seed': runtime.seed,
        'jobs': runtime.jobs,
        'out_dir': runtime.out_dir,
        'backend': 'bisc',
        'sn_exponent': None,
        'weights': None,
        'mnist_dir': None,
        'limit': 1000,
        'normalization': 'unit',
        'pool': 'max',
        'pu_config': None,
    }
    flags = {
        'seed': getattr(args, 'seed', None),
        'jobs': getattr(args, 'jobs', None),
        'out_dir': getattr(args, 'out_dir', None),
        'backend': getattr(args, 'backend', None),
        'sn_exponent': getattr(args, 'sn_exp', None),
        'weights': getattr(args, 'weights', None),
        'mnist_dir': getattr(args, 'mnist_dir', None),
        'limit': getattr(args, 'limit', None),
        'normalization': getattr(args, 'normalization', None),
        'pool': getattr(args, 'pool', None),
        'pu_config': getattr(args, 'pu_config', None),
    }

    options = {}
    for key, default in defaults.items():
        if flags[key] is not None:
            options[key] = flags[key]
        elif key in file_values:
            options[key] = file_values[key]
        else:
            options[key] = default

    if options['backend'] not in BACKEND_NAMES:
        raise ConfigError(f"알 수 없는 백엔드: {options['backend']}")
    if options['jobs'] < 1:
        raise ConfigError(f"jobs는 1 이상이어야 합니다: {options['jobs']}")
    return options


def print_failure(result: Dict[str, Any]) -> int:
    print("❌ 실행 실패!")
    if 'error' in result:
        print(f"오류: {result['error']}")
    return result.get('exit_code', 1)


def print_artifacts(result: Dict[str, Any], out_dir: Optional[str]):
    print(f"📁 출력 디렉토리: {out_dir}")
    for artifact in result.get('artifacts', []):
        print(f"   ├─ {artifact['path']} (sha256 {artifact['sha256'][:12]})")
    print(f"⏱️ 실행 시간: {result['execution_time']:.2f}초")


def run_command(runner: ExperimentRunner, args: argparse.Namespace, options: Dict[str, Any]) -> int:
    """서브커맨드 실행, 종료 코드 반환"""
    command = args.command

    if command == 'encode-demo':
        print(f"🔢 SNG 인코딩: v={args.value}, {args.format}, 길이 2^{args.exponent}")
        print("-" * 40)
        result = runner.encode_demo(args.value, args.format, args.exponent, options['seed'], args.source)
        if not result['success']:
            return print_failure(result)
        print(f"비트열: {result['bits']}")
        print(f"popcount: {result['popcount']}/{result['length']}")
        print(f"디코딩: {result['decoded']:.6f}")
        return 0

    if command == 'stats':
        print("📊 실행 기록 통계")
        print("-" * 30)
        stats = runner.get_database_statistics()
        print(f"총 실행: {stats.get('total_runs', 0):,}회")
        print(f"성공: {stats.get('successful_runs', 0):,}회")
        print(f"실패: {stats.get('failed_runs', 0):,}회")
        print(f"산출물: {stats.get('total_artifacts', 0):,}개")
        for name, count in sorted(stats.get('runs_by_command', {}).items()):
            print(f"   ├─ {name}: {count}회")
        return 0

    if command == 'lenet':
        print(f"🧠 LeNet 평가: backend={options['backend']}, 이미지 {options['limit']}장")
        print("-" * 40)
        result = runner.run_lenet(
            backend=options['backend'], out_dir=options['out_dir'], seed=options['seed'],
            weights_path=options['weights'], mnist_dir=options['mnist_dir'], limit=options['limit'],
            sn_exponent=options['sn_exponent'], jobs=options['jobs'],
            normalization=options['normalization'], pool=options['pool'], config_path=args.config,
        )
        if not result['success']:
            return print_failure(result)
        print("✅ 평가 완료!")
        print(f"🎯 정확도: {result['accuracy']:.4f} ({result['images']}장)")
        print(f"🔁 사이클: {result['report'].total_cycles:,}")
        print(f"⏲️ 평가 시간 추정: {result['report'].evaluation_time_s:.4e}초")
        print_artifacts(result, options['out_dir'])
        return 0

    if command == 'sweep':
        print(f"📈 오차 스윕: {args.spec}")
        print("-" * 40)
        result = runner.run_sweep(args.spec, options['out_dir'], seed=args.seed, jobs=options['jobs'])
        if not result['success']:
            return print_failure(result)
        print("✅ 스윕 완료!")
        print(f"🧪 실험: {result['experiment']} ({result['rows']}행)")
        if 'ranking_holds' in result['metadata']:
            print(f"🌲 트리 덧셈기 최소 RMSE: {result['metadata']['ranking_holds']}")
        print_artifacts(result, options['out_dir'])
        return 0

    if command == 'compare':
        print("⚖️ 가속기 비교 (BISC / ESL-raw / ESL-convert)")
        print("-" * 40)
        result = runner.run_compare(
            out_dir=options['out_dir'], seed=options['seed'], weights_path=options['weights'],
            mnist_dir=options['mnist_dir'], limit=options['limit'], sn_exponent=options['sn_exponent'],
            jobs=options['jobs'], reported=args.reported, pu_config_path=options['pu_config'],
            normalization=options['normalization'], pool=options['pool'],
        )
        if not result['success']:
            return print_failure(result)
        print("✅ 비교 완료!")
        for name, speedup in result['speedups'].items():
            accuracy = result['accuracies'].get(name)
            accuracy_text = f", 정확도 {accuracy:.4f}" if accuracy is not None else ''
            print(f"   ├─ {name}: 평가 시간 {speedup:.1f}x{accuracy_text}")
        print(f"💾 버퍼 점유 비율 (ESL-raw/이진): {result['footprint_ratio']:.1f}x")
        print_artifacts(result, options['out_dir'])
        return 0

    if command == 'import-weights':
        output = args.output or os.path.join(options['out_dir'], 'weights.scnw')
        print(f"📦 가중치 가져오기: {args.source} -> {output}")
        print("-" * 40)
        result = runner.import_weights(args.source, output, pool=args.pool)
        if not result['success']:
            return print_failure(result)
        print("✅ 변환 완료!")
        print(f"레이어: {', '.join(result['layers'])}")
        print(f"MAC 수: {result['mac_count']:,}")
        print(f"체크섬: {result['checksum']}")
        return 0

    raise ConfigError(f"알 수 없는 명령: {command}")


def main(argv=None) -> int:
    """메인 실행 함수"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        print("\n사용 예시:")
        print("python main.py encode-demo 0.5 --format unipolar")
        print("python main.py lenet --backend bisc --weights weights.scnw --mnist-dir data/mnist")
        print("python main.py sweep configs/sweep_sng.env --jobs 4")
        print("python main.py compare --reported")
        print("python main.py import-weights lenet_weights.bin --out-dir data")
        print("python main.py stats")
        return 0

    try:
        options = resolve_options(args)
        with ExperimentRunner() as runner:
            print("=" * 60)
            print("SCBench (Stochastic Computing Benchmark)")
            print("BISC-MVM / ESL 가속기 시뮬레이터")
            print("=" * 60)
            print(f"실행 시간: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
            print(f"시드: {options['seed']}, 작업자: {options['jobs']}")
            print()
            return run_command(runner, args, options)

    except KeyboardInterrupt:
        print("\n⏹️ 사용자에 의해 중단되었습니다.")
        return EXIT_INTERRUPTED
    except ScbenchError as e:
        print(f"❌ 오류가 발생했습니다: {e}")
        return e.exit_code
    except Exception as e:
        print(f"❌ 오류가 발생했습니다: {e}")
        import traceback
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
