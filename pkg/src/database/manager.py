"""
SCBench 프로젝트 - 데이터베이스 매니저
SQLite 실행 기록 데이터베이스 연결 및 관리
"""

import os
import logging
from typing import List, Dict, Any
from sqlalchemy import create_engine, desc, func
from sqlalchemy.orm import sessionmaker, Session
from sqlalchemy.exc import SQLAlchemyError
from contextlib import contextmanager

from src.models.run import Base, ExperimentRun, RunArtifact


class DatabaseManager:
    """SCBench 실행 기록 데이터베이스 매니저"""

    def __init__(self, db_path: str):
        """
        데이터베이스 매니저 초기화

        Args:
            db_path: SQLite 데이터베이스 파일 경로
        """
        self.db_path = db_path
        self.engine = None
        self.SessionLocal = None
        self.logger = logging.getLogger(__name__)

        self._setup_database()

    def _setup_database(self):
        """데이터베이스 초기 설정"""
        try:
            directory = os.path.dirname(self.db_path)
            if directory:
                os.makedirs(directory, exist_ok=True)

            self.engine = create_engine(
                f'sqlite:///{self.db_path}',
                echo=False,
                connect_args={
                    'check_same_thread': False,
                    'timeout': 30
                }
            )
            self.SessionLocal = sessionmaker(bind=self.engine, expire_on_commit=False)
            Base.metadata.create_all(bind=self.engine)

            self.logger.info(f"데이터베이스 연결 성공: {self.db_path}")

        except Exception as e:
            self.logger.error(f"데이터베이스 초기화 실패: {e}")
            raise

    @contextmanager
    def get_session(self) -> Session:
        """데이터베이스 세션 컨텍스트 매니저"""
        session = self.SessionLocal()
        try:
            yield session
            session.commit()
        except Exception as e:
            session.rollback()
            self.logger.error(f"데이터베이스 세션 에러: {e}")
            raise
        finally:
            session.close()

    def save_run(self, run_data: Dict[str, Any]) -> Dict[str, Any]:
        """
        실행 기록과 산출물 저장

        Args:
            run_data: 매니페스트 딕셔너리 (artifacts: [{'path', 'sha256', 'kind'}, ...])

        Returns:
            저장된 실행의 딕셔너리 (실패 시 빈 딕셔너리)
        """
        try:
            with self.get_session() as session:
                run = ExperimentRun(
                    command=run_data.get('command', ''),
                    config_path=run_data.get('config_path'),
                    seed=run_data.get('seed', 0),
                    jobs=run_data.get('jobs', 1),
                    backend=run_data.get('backend'),
                    out_dir=run_data.get('out_dir'),
                    spec_hash=run_data.get('spec_hash'),
                    success=run_data.get('success', True),
                    error_message=run_data.get('error_message', ''),
                    execution_time=run_data.get('execution_time', 0.0),
                )
                for artifact in run_data.get('artifacts', []):
                    run.artifacts.append(RunArtifact(
                        path=artifact['path'],
                        sha256=artifact['sha256'],
                        kind=artifact.get('kind'),
                    ))
                session.add(run)
                session.flush()

                self.logger.debug(f"실행 기록 저장: {run.id} ({len(run.artifacts)}개 산출물)")
                return run.to_dict()

        except SQLAlchemyError as e:
            self.logger.error(f"실행 기록 저장 실패: {e}")
            return {}

    def get_recent_runs(self, limit: int = 10) -> List[Dict[str, Any]]:
        """최근 실행 기록 조회"""
        try:
            with self.get_session() as session:
                runs = session.query(ExperimentRun)\
                    .order_by(desc(ExperimentRun.created_at), desc(ExperimentRun.id))\
                    .limit(limit)\
                    .all()
                return [run.to_dict() for run in runs]
        except SQLAlchemyError as e:
            self.logger.error(f"실행 기록 조회 실패: {e}")
            return []

    def find_runs_by_hash(self, spec_hash: str) -> List[Dict[str, Any]]:
        """같은 명세 해시로 실행한 기록 조회 (재현성 비교용)"""
        try:
            with self.get_session() as session:
                runs = session.query(ExperimentRun)\
                    .filter(ExperimentRun.spec_hash == spec_hash)\
                    .order_by(ExperimentRun.id)\
                    .all()
                return [run.to_dict() for run in runs]
        except SQLAlchemyError as e:
            self.logger.error(f"해시 조회 실패: {e}")
            return []

    def get_statistics(self) -> Dict[str, Any]:
        """데이터베이스 통계 조회"""
        try:
            with self.get_session() as session:
                total_runs = session.query(ExperimentRun).count()
                failed_runs = session.query(ExperimentRun)\
                    .filter(ExperimentRun.success == False).count()  # noqa: E712
                by_command = dict(
                    session.query(ExperimentRun.command, func.count(ExperimentRun.id))
                    .group_by(ExperimentRun.command)
                    .all()
                )
                total_artifacts = session.query(RunArtifact).count()
                recent_runs = session.query(ExperimentRun)\
                    .order_by(desc(ExperimentRun.created_at), desc(ExperimentRun.id))\
                    .limit(5)\
                    .all()

                return {
                    'total_runs': total_runs,
                    'failed_runs': failed_runs,
                    'successful_runs': total_runs - failed_runs,
                    'runs_by_command': by_command,
                    'total_artifacts': total_artifacts,
                    'recent_runs': [run.to_dict() for run in recent_runs]
                }

        except SQLAlchemyError as e:
            self.logger.error(f"통계 조회 실패: {e}")
            return {}

    def close(self):
        """데이터베이스 연결 종료"""
        if self.engine:
            self.engine.dispose()
            self.logger.info("데이터베이스 연결 종료")
