"""
SCBench 프로젝트 - 예외 정의
설정/데이터/연산 오류를 CLI 종료 코드와 연결되는 세 계열로 구분
"""


class ScbenchError(Exception):
    """SCBench 공통 예외"""

    exit_code = 1


class ConfigError(ScbenchError):
    """설정 파일 또는 인수 오류"""

    exit_code = 2


class DataError(ScbenchError):
    """입력 데이터(IDX, 가중치 파일) 오류"""

    exit_code = 3


class ComputeError(ScbenchError):
    """연산 중 발생한 오류"""

    exit_code = 4


class StreamRangeError(ComputeError, ValueError):
    """SNG 입력값이 표현 범위를 벗어남"""


class StreamMismatchError(ComputeError, ValueError):
    """스트림 길이 또는 포맷 불일치"""


class EslDomainError(ComputeError, ArithmeticError):
    """ESL 분모가 0이거나 표현 불가능한 값"""


class ShapeError(ComputeError, ValueError):
    """텐서/레이어 형상 불일치"""


class MissingBackendError(ComputeError, KeyError):
    """비교 리포트에 필요한 백엔드 결과 누락"""


class IdxFormatError(DataError, ValueError):
    """IDX 파일 형식 오류"""


class WeightFormatError(DataError, ValueError):
    """가중치 덤프/컨테이너 형식 오류"""


class SweepSpecError(ConfigError, ValueError):
    """스윕 명세 오류"""
