"""
SCBench 프로젝트 - 설정 매니저
환경변수 및 키-값 설정 파일 관리
"""

import os
import logging
from typing import Any, Callable, Dict, Mapping, Optional
from dotenv import load_dotenv, dotenv_values
from dataclasses import dataclass, field

from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

# 합성 결과로 보고된 임계 경로 지연 (ns)
DEFAULT_CLOCK_PERIODS_NS = {
    'bisc': 1.40,
    'esl-raw': 2.25,
    'esl-convert': 2.39,
}

@dataclass
class SimulatorConfig:
    """시뮬레이터 기본 설정"""
    sn_exponent: int
    int_bits: int
    frac_bits: int
    source_kind: str
    clock_periods_ns: Dict[str, float] = field(default_factory=dict)

@dataclass
class RuntimeConfig:
    """실행 설정 (시드, 병렬도, 출력 경로)"""
    seed: int
    jobs: int
    out_dir: str

@dataclass
class DatabaseConfig:
    """데이터베이스 설정"""
    path: str

@dataclass
class LogConfig:
    """로그 설정"""
    level: str
    file: str


def _parse_value(key: str, raw: Optional[str], cast: Callable[[str], Any]) -> Any:
    try:
        return cast(raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"설정 값 형식 오류: {key}={raw!r} ({e})") from e


def read_key_value_file(path: str, schema: Mapping[str, Callable[[str], Any]]) -> Dict[str, Any]:
    """
    dotenv 형식의 키-값 파일 읽기

    Args:
        path: 설정 파일 경로
        schema: 허용 키와 변환 함수 매핑

    Returns:
        변환된 값 딕셔너리 (파일에 있는 키만 포함)
    """
    if not os.path.exists(path):
        raise ConfigError(f"설정 파일을 찾을 수 없습니다: {path}")

    values = dotenv_values(path)
    unknown = sorted(set(values) - set(schema))
    if unknown:
        raise ConfigError(f"알 수 없는 설정 키: {', '.join(unknown)} ({path})")

    parsed = {key: _parse_value(key, raw, schema[key]) for key, raw in values.items()}
    logger.debug(f"설정 파일 로드: {path} ({len(parsed)}개 키)")
    return parsed


def parse_int_list(raw: str) -> tuple:
    """'6,7,8' 또는 '6-13' 형식을 정수 튜플로 변환"""
    raw = raw.strip()
    if '-' in raw and ',' not in raw and not raw.startswith('-'):
        lo, hi = (int(part) for part in raw.split('-', 1))
        if hi < lo:
            raise ValueError(f"범위가 비어 있습니다: {raw}")
        return tuple(range(lo, hi + 1))
    return tuple(int(part) for part in raw.split(',') if part.strip())


def parse_float_pair(raw: str) -> tuple:
    """'-4,3' 형식을 (lo, hi) 실수 쌍으로 변환"""
    parts = [float(part) for part in raw.split(',')]
    if len(parts) != 2:
        raise ValueError(f"두 개의 값이 필요합니다: {raw}")
    return parts[0], parts[1]


class ConfigManager:
    """SCBench 프로젝트 설정 매니저"""

    def __init__(self, env_file: str = '.env'):
        """
        설정 매니저 초기화

        Args:
            env_file: 환경변수 파일 경로
        """
        self.env_file = env_file
        self._load_environment()

    def _load_environment(self):
        """환경변수 로드"""
        if os.path.exists(self.env_file):
            load_dotenv(self.env_file)
            logger.debug(f"환경변수 파일 로드: {self.env_file}")

    @property
    def simulator(self) -> SimulatorConfig:
        """시뮬레이터 설정 반환"""
        return SimulatorConfig(
            sn_exponent=int(os.getenv('SCBENCH_SN_EXPONENT', '9')),
            int_bits=int(os.getenv('SCBENCH_INT_BITS', '2')),
            frac_bits=int(os.getenv('SCBENCH_FRAC_BITS', '6')),
            source_kind=os.getenv('SCBENCH_SOURCE_KIND', 'lfsr'),
            clock_periods_ns={
                'bisc': float(os.getenv('CLOCK_PERIOD_BISC_NS', DEFAULT_CLOCK_PERIODS_NS['bisc'])),
                'esl-raw': float(os.getenv('CLOCK_PERIOD_ESL_RAW_NS', DEFAULT_CLOCK_PERIODS_NS['esl-raw'])),
                'esl-convert': float(os.getenv('CLOCK_PERIOD_ESL_CONVERT_NS', DEFAULT_CLOCK_PERIODS_NS['esl-convert'])),
            }
        )

    @property
    def runtime(self) -> RuntimeConfig:
        """실행 설정 반환"""
        return RuntimeConfig(
            seed=int(os.getenv('SCBENCH_SEED', '2024')),
            jobs=int(os.getenv('SCBENCH_JOBS', '1')),
            out_dir=os.getenv('SCBENCH_OUT_DIR', 'results')
        )

    @property
    def database(self) -> DatabaseConfig:
        """데이터베이스 설정 반환"""
        return DatabaseConfig(
            path=os.getenv('DATABASE_PATH', 'data/scbench_runs.db')
        )

    @property
    def log(self) -> LogConfig:
        """로그 설정 반환"""
        return LogConfig(
            level=os.getenv('LOG_LEVEL', 'INFO'),
            file=os.getenv('LOG_FILE', 'logs/scbench.log')
        )

    def get_project_root(self) -> str:
        """프로젝트 루트 디렉토리 반환"""
        return os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

    def get_full_path(self, relative_path: str) -> str:
        """상대 경로를 절대 경로로 변환"""
        if os.path.isabs(relative_path):
            return relative_path
        return os.path.join(self.get_project_root(), relative_path)

    def setup_logging(self):
        """로깅 설정"""
        log_config = self.log

        # 로그 디렉토리 생성
        log_dir = os.path.dirname(self.get_full_path(log_config.file))
        os.makedirs(log_dir, exist_ok=True)

        # 로깅 설정
        logging.basicConfig(
            level=getattr(logging, log_config.level.upper()),
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=[
                logging.FileHandler(self.get_full_path(log_config.file), encoding='utf-8'),
                logging.StreamHandler()
            ]
        )

        return logging.getLogger('SCBench')

# 전역 설정 인스턴스
config = ConfigManager()
