"""
SCBench 프로젝트 - MNIST IDX 로더
빅엔디언 IDX 파일 파싱(gzip 자동 인식)과 레이블 짝짓기, 입력 정규화
"""

import gzip
import logging
import os
import struct
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.nn.lenet import DEFAULT_NORMALIZATION, prepare_images
from src.nn.model import Dataset, NUM_CLASSES
from src.utils.errors import DataError, IdxFormatError

logger = logging.getLogger(__name__)

# IDX 원소 타입 코드 -> 빅엔디언 dtype
IDX_DTYPES = {
    0x08: np.dtype('>u1'),
    0x09: np.dtype('>i1'),
    0x0B: np.dtype('>i2'),
    0x0C: np.dtype('>i4'),
    0x0D: np.dtype('>f4'),
    0x0E: np.dtype('>f8'),
}
GZIP_MAGIC = b'\x1f\x8b'


@dataclass(frozen=True)
class IdxFile:
    """파싱된 IDX 파일"""
    magic: int
    dims: Tuple[int, ...]
    payload: bytes

    @property
    def type_code(self) -> int:
        return (self.magic >> 8) & 0xFF

    @property
    def rank(self) -> int:
        return self.magic & 0xFF

    @property
    def dtype(self) -> np.dtype:
        return IDX_DTYPES[self.type_code]

    def array(self) -> np.ndarray:
        return np.frombuffer(self.payload, dtype=self.dtype).reshape(self.dims)

    def __repr__(self) -> str:
        return f"<IdxFile(type=0x{self.type_code:02X}, dims={self.dims})>"


def parse_idx(data: bytes) -> IdxFile:
    """
    IDX 바이트열 파싱

    Args:
        data: 원본 또는 gzip 압축 바이트열

    Returns:
        IdxFile
    """
    if data[:2] == GZIP_MAGIC:
        data = gzip.decompress(data)
    if len(data) < 4:
        raise IdxFormatError(f"IDX 헤더가 너무 짧습니다: {len(data)}바이트")

    magic, = struct.unpack('>I', data[:4])
    zero, type_code, rank = magic >> 16, (magic >> 8) & 0xFF, magic & 0xFF
    if zero != 0 or type_code not in IDX_DTYPES or rank == 0:
        raise IdxFormatError(f"IDX 매직 넘버 오류: 0x{magic:08X}")

    header_end = 4 + 4 * rank
    if len(data) < header_end:
        raise IdxFormatError(f"IDX 차원 헤더가 잘렸습니다: rank={rank}")
    dims = struct.unpack(f'>{rank}I', data[4:header_end])

    expected = int(np.prod(dims, dtype=np.int64)) * IDX_DTYPES[type_code].itemsize
    payload = data[header_end:]
    if len(payload) != expected:
        raise IdxFormatError(f"IDX 데이터 길이 불일치: {len(payload)} != {expected} (dims={dims})")
    return IdxFile(magic, tuple(int(d) for d in dims), payload)


def read_idx(path: str) -> IdxFile:
    """IDX 파일 읽기"""
    if not os.path.exists(path):
        raise DataError(f"IDX 파일을 찾을 수 없습니다: {path}")
    with open(path, 'rb') as f:
        return parse_idx(f.read())


def load_mnist(images_path: str, labels_path: str, limit: int = 1000,
               mode: str = DEFAULT_NORMALIZATION, padding: int = 2) -> Dataset:
    """
    MNIST 테스트 이미지와 레이블 로드

    Args:
        images_path: 이미지 IDX (ubyte, rank 3)
        labels_path: 레이블 IDX (ubyte, rank 1)
        limit: 앞에서부터 사용할 이미지 수
        mode: 입력 정규화 방식
        padding: 가장자리 패딩 폭

    Returns:
        Dataset (images 형상 (N, 1, H + 2p, W + 2p))
    """
    if limit <= 0:
        raise DataError(f"이미지 수 제한이 0 이하입니다: {limit}")

    images = read_idx(images_path)
    labels = read_idx(labels_path)
    if images.type_code != 0x08 or images.rank != 3:
        raise IdxFormatError(f"이미지 파일은 ubyte rank-3 이어야 합니다: {images}")
    if labels.type_code != 0x08 or labels.rank != 1:
        raise IdxFormatError(f"레이블 파일은 ubyte rank-1 이어야 합니다: {labels}")
    if images.dims[0] != labels.dims[0]:
        raise IdxFormatError(f"이미지/레이블 개수 불일치: {images.dims[0]} != {labels.dims[0]}")

    pixels = images.array()[:limit]
    label_values = labels.array()[:limit].astype(np.int64)
    if label_values.size and label_values.max() >= NUM_CLASSES:
        raise IdxFormatError(f"레이블 범위 밖 값: {int(label_values.max())}")

    logger.info(f"MNIST 로드: {len(pixels)}개 이미지 ({images_path}), 정규화={mode}")
    return Dataset(prepare_images(pixels, mode=mode, padding=padding), label_values)


def write_idx(path: str, array: np.ndarray):
    """배열을 IDX 형식으로 저장 (테스트 데이터 작성용)"""
    array = np.asarray(array)
    codes = {np.dtype(v).newbyteorder('='): k for k, v in IDX_DTYPES.items()}
    native = array.dtype.newbyteorder('=')
    if native not in codes:
        raise IdxFormatError(f"IDX로 저장할 수 없는 dtype: {array.dtype}")
    code = codes[native]
    header = struct.pack('>I', (code << 8) | array.ndim) + struct.pack(f'>{array.ndim}I', *array.shape)
    with open(path, 'wb') as f:
        f.write(header + array.astype(IDX_DTYPES[code]).tobytes())


MNIST_TEST_FILES = ('t10k-images-idx3-ubyte', 't10k-labels-idx1-ubyte')


def locate_mnist(directory: str) -> Tuple[str, str]:
    """
    디렉토리에서 MNIST 테스트 이미지/레이블 파일 찾기 (.gz 포함)

    Returns:
        (이미지 경로, 레이블 경로)
    """
    found = []
    for stem in MNIST_TEST_FILES:
        candidates = [os.path.join(directory, name) for name in (stem, f'{stem}.gz', stem.replace('-idx', '.idx'))]
        path = next((c for c in candidates if os.path.exists(c)), None)
        if path is None:
            raise DataError(f"MNIST 파일을 찾을 수 없습니다: {os.path.join(directory, stem)}[.gz]")
        found.append(path)
    return found[0], found[1]
