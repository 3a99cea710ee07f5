"""
SCBench 프로젝트 - pytest 공통 설정
"""

import os
import sys

import pytest

project_root = os.path.dirname(os.path.abspath(__file__))
if project_root not in sys.path:
    sys.path.insert(0, project_root)


@pytest.fixture
def isolated_env(tmp_path, monkeypatch):
    """출력/DB/로그를 임시 디렉토리로 돌린 환경"""
    monkeypatch.setenv('DATABASE_PATH', str(tmp_path / 'runs.db'))
    monkeypatch.setenv('LOG_FILE', str(tmp_path / 'logs' / 'scbench.log'))
    monkeypatch.setenv('SCBENCH_OUT_DIR', str(tmp_path / 'results'))
    monkeypatch.setenv('SCBENCH_SEED', '7')
    return tmp_path
