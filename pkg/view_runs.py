"""
SCBench 프로젝트 - 실행 기록 조회 스크립트
저장된 실험 실행과 산출물 해시를 확인하는 유틸리티
"""

import os
import sys
import argparse

# 프로젝트 루트 경로
project_root = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, project_root)

import pandas as pd  # noqa: E402

from src.database.manager import DatabaseManager  # noqa: E402
from src.utils.config import config  # noqa: E402


def open_db():
    """데이터베이스 열기"""
    db_path = config.get_full_path(config.database.path)
    if not os.path.exists(db_path):
        print(f"❌ 데이터베이스 파일을 찾을 수 없습니다: {db_path}")
        print("먼저 실험을 실행해주세요.")
        return None
    return DatabaseManager(db_path)


def view_recent_runs(limit=10):
    """최근 실행 조회"""
    db = open_db()
    if not db:
        return

    runs = db.get_recent_runs(limit)
    print("=" * 80)
    print(f"🧪 최근 실행 (최대 {limit}개)")
    print("=" * 80)

    if not runs:
        print("기록된 실행이 없습니다.")
    for i, run in enumerate(runs, 1):
        status = "✅" if run['success'] else "❌"
        print(f"\n[{i}] {status} ID: {run['id']} ({run['command']})")
        print(f"시드: {run['seed']}, 작업자: {run['jobs']}, 백엔드: {run['backend']}")
        print(f"출력: {run['out_dir']}")
        print(f"실행일: {run['created_at']}, 소요: {run['execution_time'] or 0:.2f}초")
        if run['error_message']:
            print(f"오류: {run['error_message']}")
        for artifact in run['artifacts']:
            print(f"  - {artifact['path']} {artifact['sha256'][:16]}")
        print("-" * 80)

    db.close()


def view_runs_by_hash(spec_hash):
    """같은 명세 해시의 실행 비교 (산출물 해시가 같으면 재현 성공)"""
    db = open_db()
    if not db:
        return

    runs = db.find_runs_by_hash(spec_hash)
    print("=" * 80)
    print(f"🔁 명세 해시 {spec_hash[:16]}... 실행 {len(runs)}건")
    print("=" * 80)

    digests = {}
    for run in runs:
        key = tuple(sorted((a['path'], a['sha256']) for a in run['artifacts'] if a['kind'] == 'csv'))
        digests.setdefault(key, []).append(run['id'])
        print(f"  - ID {run['id']} seed={run['seed']} jobs={run['jobs']} 산출물 {len(run['artifacts'])}개")

    if len(runs) > 1:
        print(f"\nCSV 산출물 일치: {'예' if len(digests) == 1 else '아니오'}")
    db.close()


def view_statistics():
    """통계 조회"""
    db = open_db()
    if not db:
        return

    stats = db.get_statistics()
    print("=" * 80)
    print("📊 SCBench 실행 기록 통계")
    print("=" * 80)
    print(f"\n🧪 전체 실행")
    print(f"  - 총 실행: {stats.get('total_runs', 0):,}회")
    print(f"  - 성공: {stats.get('successful_runs', 0):,}회")
    print(f"  - 실패: {stats.get('failed_runs', 0):,}회")
    print(f"  - 산출물: {stats.get('total_artifacts', 0):,}개")

    by_command = stats.get('runs_by_command', {})
    if by_command:
        print(f"\n🔍 명령별 통계")
        for command, count in sorted(by_command.items(), key=lambda kv: -kv[1]):
            print(f"  - {command}: {count:,}회")
    db.close()


def export_to_csv(filename='scbench_runs_export.csv', limit=1000):
    """CSV로 내보내기"""
    db = open_db()
    if not db:
        return

    runs = db.get_recent_runs(limit)
    if not runs:
        print("내보낼 실행 기록이 없습니다.")
        db.close()
        return

    frame = pd.DataFrame([{k: v for k, v in run.items() if k != 'artifacts'} for run in runs])
    csv_path = os.path.join(project_root, filename)
    frame.to_csv(csv_path, index=False, encoding='utf-8-sig')
    print(f"✅ CSV 파일로 내보내기 완료: {csv_path}")
    print(f"총 {len(frame):,}개의 실행 기록")
    db.close()


def main():
    """메인 함수"""
    parser = argparse.ArgumentParser(description='SCBench 실행 기록 조회')
    parser.add_argument('--recent', '-r', action='store_true', help='최근 실행 조회')
    parser.add_argument('--limit', '-l', type=int, default=10, help='조회할 실행 개수')
    parser.add_argument('--hash', type=str, help='명세 해시로 실행 비교')
    parser.add_argument('--stats', '-s', action='store_true', help='통계 조회')
    parser.add_argument('--export', '-e', action='store_true', help='CSV로 내보내기')

    args = parser.parse_args()

    if len(sys.argv) == 1 or args.stats:
        view_statistics()
    elif args.recent:
        view_recent_runs(args.limit)
    elif args.hash:
        view_runs_by_hash(args.hash)
    elif args.export:
        export_to_csv()
    else:
        parser.print_help()


if __name__ == "__main__":
    main()
