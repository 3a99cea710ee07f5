"""
SCBench 프로젝트 - 실험 실행 기록 모델
SQLAlchemy를 사용한 실행 매니페스트와 산출물 해시 구조 정의
"""

from sqlalchemy import Column, Integer, String, Text, DateTime, Boolean, Float, ForeignKey
from sqlalchemy.ext.declarative import declarative_base
from sqlalchemy.orm import relationship
from sqlalchemy.sql import func

Base = declarative_base()


class ExperimentRun(Base):
    """CLI 실행 한 건 (매니페스트)"""

    __tablename__ = 'experiment_runs'

    id = Column(Integer, primary_key=True, autoincrement=True)

    # 실행 조건
    command = Column(String(50), nullable=False, comment='서브커맨드')
    config_path = Column(Text, comment='설정 파일 경로')
    seed = Column(Integer, nullable=False, comment='마스터 시드')
    jobs = Column(Integer, default=1, comment='병렬 작업자 수')
    backend = Column(String(20), comment='연산 백엔드')
    out_dir = Column(Text, comment='출력 디렉토리')
    spec_hash = Column(String(64), index=True, comment='명세/설정 해시')

    # 결과
    success = Column(Boolean, default=True, comment='성공 여부')
    error_message = Column(Text, comment='에러 메시지')
    execution_time = Column(Float, comment='실행 시간 (초)')
    created_at = Column(DateTime, default=func.now())

    artifacts = relationship('RunArtifact', back_populates='run', cascade='all, delete-orphan',
                             order_by='RunArtifact.path')

    def __repr__(self):
        return f"<ExperimentRun(id={self.id}, command='{self.command}', seed={self.seed}, success={self.success})>"

    def to_dict(self) -> dict:
        """객체를 딕셔너리로 변환"""
        return {
            'id': self.id,
            'command': self.command,
            'config_path': self.config_path,
            'seed': self.seed,
            'jobs': self.jobs,
            'backend': self.backend,
            'out_dir': self.out_dir,
            'spec_hash': self.spec_hash,
            'success': self.success,
            'error_message': self.error_message,
            'execution_time': self.execution_time,
            'created_at': self.created_at.isoformat() if self.created_at else None,
            'artifacts': [artifact.to_dict() for artifact in self.artifacts],
        }


class RunArtifact(Base):
    """실행이 만든 출력 파일과 SHA-256"""

    __tablename__ = 'run_artifacts'

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey('experiment_runs.id'), nullable=False)
    path = Column(Text, nullable=False, comment='파일 경로')
    sha256 = Column(String(64), nullable=False, comment='파일 해시')
    kind = Column(String(20), comment='csv, json, container 등')

    run = relationship('ExperimentRun', back_populates='artifacts')

    def __repr__(self):
        return f"<RunArtifact(path='{self.path}', sha256='{self.sha256[:12]}')>"

    def to_dict(self) -> dict:
        return {
            'path': self.path,
            'sha256': self.sha256,
            'kind': self.kind,
        }
