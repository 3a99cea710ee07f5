"""
SCBench 프로젝트 - 가중치 가져오기 및 컨테이너 형식
LeNet-5 실수 덤프/npz 가져오기, 레이어 표 추론, 체크섬이 붙은 자기 기술형 컨테이너
"""

import hashlib
import json
import logging
import os
import struct
from dataclasses import replace
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.nn.lenet import LENET_INPUT
from src.nn.model import (
    Activation, LayerKind, LayerSpec, ModelWeights, PoolKind,
)
from src.utils.errors import DataError, ShapeError, WeightFormatError

logger = logging.getLogger(__name__)

CONTAINER_MAGIC = b'SCNW'
CONTAINER_VERSION = 1
DIGEST_SIZE = 32

# C 프레임워크 덤프의 텐서 순서와 형상 (float64, [in][out][kh][kw])
LENET_DUMP_LAYOUT = (
    ('weight0_1', (1, 6, 5, 5)),
    ('weight2_3', (6, 16, 5, 5)),
    ('weight4_5', (16, 120, 5, 5)),
    ('weight5_6', (120, 10)),
    ('bias0_1', (6,)),
    ('bias2_3', (16,)),
    ('bias4_5', (120,)),
    ('bias5_6', (10,)),
)
LENET_DUMP_DOUBLES = sum(int(np.prod(shape)) for _, shape in LENET_DUMP_LAYOUT)


def infer_layers(named_weights: Sequence[Tuple[str, Tuple[int, ...]]],
                 input_shape: Tuple[int, int, int],
                 pool: PoolKind = PoolKind.MAX) -> Tuple[LayerSpec, ...]:
    """
    가중치 형상으로 레이어 표 추론

    4차원 (out, in, k, k)는 컨볼루션, 2차원 (out, in)은 완전연결이다.
    연속한 컨볼루션 사이에는 2×2 풀링을 넣고, 마지막 레이어를 뺀 가중 레이어 뒤에 ReLU를 둔다.
    마지막 레이어 출력은 클래스 점수이므로 음수도 그대로 남긴다.

    Args:
        named_weights: (레이어 이름, 가중치 형상) 목록
        input_shape: (C, H, W) 입력 형상
        pool: 풀링 종류

    Returns:
        형상이 이어지는 LayerSpec 튜플
    """
    layers: List[LayerSpec] = []
    previous_conv = False
    for name, shape in named_weights:
        if len(shape) == 4:
            out_c, in_c, kh, kw = shape
            if kh != kw:
                raise WeightFormatError(f"{name}: 정사각형 커널만 지원합니다 ({kh}x{kw})")
            if previous_conv:
                channels = layers[-1].out_channels
                layers.append(LayerSpec(f'pool{len(layers)}', LayerKind.POOL, channels, channels,
                                        kernel=2, stride=2, pool=pool))
            layers.append(LayerSpec(name, LayerKind.CONV, in_c, out_c, kernel=kh, activation=Activation.RELU))
            previous_conv = True
        elif len(shape) == 2:
            out_f, in_f = shape
            layers.append(LayerSpec(name, LayerKind.FULLY_CONNECTED, in_f, out_f, activation=Activation.RELU))
            previous_conv = False
        else:
            raise WeightFormatError(f"{name}: 지원하지 않는 가중치 차원 {shape}")

    if layers:
        layers[-1] = replace(layers[-1], activation=Activation.NONE)

    shape = tuple(input_shape)
    try:
        for layer in layers:
            shape = layer.output_shape(shape)
    except ShapeError as e:
        raise WeightFormatError(f"레이어 형상이 이어지지 않습니다: {e}") from e
    return tuple(layers)


def _from_lenet_dump(path: str, pool: PoolKind) -> ModelWeights:
    data = np.fromfile(path, dtype='<f8')
    if data.size == 0:
        raise WeightFormatError(f"가중치 덤프가 비어 있습니다: {path}")
    if data.size != LENET_DUMP_DOUBLES:
        raise WeightFormatError(f"가중치 덤프 크기 불일치: {data.size} != {LENET_DUMP_DOUBLES} doubles")

    tensors: Dict[str, np.ndarray] = {}
    offset = 0
    for name, shape in LENET_DUMP_LAYOUT:
        size = int(np.prod(shape))
        tensors[name] = data[offset:offset + size].reshape(shape)
        offset += size

    names = ('conv1', 'conv2', 'conv3', 'fc')
    dump_keys = ('0_1', '2_3', '4_5', '5_6')
    weights, biases = {}, {}
    for name, key in zip(names, dump_keys):
        w = tensors[f'weight{key}']
        # [in][out]... -> (out, in, ...)
        weights[name] = np.ascontiguousarray(np.swapaxes(w, 0, 1))
        biases[name] = tensors[f'bias{key}'].copy()

    layers = infer_layers([(n, weights[n].shape) for n in names], LENET_INPUT, pool)
    return ModelWeights(layers, weights, biases, input_shape=LENET_INPUT, name='lenet5')


def _from_npz(path: str, input_shape: Tuple[int, int, int], pool: PoolKind) -> ModelWeights:
    archive = np.load(path)
    weights, biases, order = {}, {}, []
    for key in archive.files:
        name, _, part = key.rpartition('.')
        if part == 'weight':
            weights[name] = archive[key].astype(np.float64)
            order.append(name)
        elif part == 'bias':
            biases[name] = archive[key].astype(np.float64)
        else:
            raise WeightFormatError(f"npz 키는 '<layer>.weight' 또는 '<layer>.bias' 형식이어야 합니다: {key}")
    if not order:
        raise WeightFormatError(f"npz에 가중치가 없습니다: {path}")
    layers = infer_layers([(n, weights[n].shape) for n in order], input_shape, pool)
    try:
        return ModelWeights(layers, weights, biases, input_shape=input_shape,
                            name=os.path.splitext(os.path.basename(path))[0])
    except ShapeError as e:
        raise WeightFormatError(str(e)) from e


def import_weights(path: str, pool: PoolKind = PoolKind.MAX,
                   input_shape: Tuple[int, int, int] = LENET_INPUT) -> ModelWeights:
    """
    외부 가중치 파일 가져오기

    Args:
        path: LeNet-5 float64 덤프 또는 .npz 아카이브
        pool: 추론된 풀링 레이어의 종류
        input_shape: npz 모델의 입력 형상

    Returns:
        ModelWeights
    """
    if not os.path.exists(path):
        raise DataError(f"가중치 파일을 찾을 수 없습니다: {path}")
    if path.endswith('.npz'):
        model = _from_npz(path, input_shape, pool)
    else:
        model = _from_lenet_dump(path, pool)
    logger.info(f"가중치 가져오기 완료: {path} ({len(model.layers)}개 레이어, MAC {model.mac_count()})")
    return model


# ===== 컨테이너 =====

def _header(model: ModelWeights) -> Dict:
    tensors = []
    for layer in model.layers:
        if layer.has_weights:
            tensors.append({'name': f'{layer.name}.weight', 'shape': list(model.weights[layer.name].shape)})
            tensors.append({'name': f'{layer.name}.bias', 'shape': list(model.biases[layer.name].shape)})
    return {
        'name': model.name,
        'input_shape': list(model.input_shape),
        'layers': [
            {
                'name': l.name, 'kind': l.kind.value, 'in': l.in_channels, 'out': l.out_channels,
                'kernel': l.kernel, 'stride': l.stride, 'activation': l.activation.value, 'pool': l.pool.value,
            }
            for l in model.layers
        ],
        'tensors': tensors,
    }


def container_bytes(model: ModelWeights) -> bytes:
    """모델을 컨테이너 바이트열로 직렬화 (매직, 버전, JSON 헤더, float32 LE 텐서, SHA-256)"""
    header = json.dumps(_header(model), sort_keys=True, separators=(',', ':')).encode('utf-8')
    parts = [CONTAINER_MAGIC, struct.pack('<HI', CONTAINER_VERSION, len(header)), header]
    for layer in model.layers:
        if layer.has_weights:
            parts.append(np.asarray(model.weights[layer.name], dtype='<f4').tobytes())
            parts.append(np.asarray(model.biases[layer.name], dtype='<f4').tobytes())
    body = b''.join(parts)
    return body + hashlib.sha256(body).digest()


def model_checksum(model: ModelWeights) -> str:
    return hashlib.sha256(container_bytes(model)).hexdigest()


def export_container(model: ModelWeights, path: str) -> str:
    """
    컨테이너 파일 저장

    Returns:
        파일의 SHA-256 hex
    """
    data = container_bytes(model)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(data)
    digest = hashlib.sha256(data).hexdigest()
    logger.info(f"가중치 컨테이너 저장: {path} ({len(data)}바이트, sha256={digest[:12]})")
    return digest


def parse_container(data: bytes) -> ModelWeights:
    """컨테이너 바이트열 파싱 (체크섬 검증 포함)"""
    if len(data) < len(CONTAINER_MAGIC) + 6 + DIGEST_SIZE or data[:4] != CONTAINER_MAGIC:
        raise WeightFormatError("가중치 컨테이너 매직 넘버 오류")
    body, digest = data[:-DIGEST_SIZE], data[-DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise WeightFormatError("가중치 컨테이너 체크섬 불일치")

    version, header_len = struct.unpack('<HI', body[4:10])
    if version != CONTAINER_VERSION:
        raise WeightFormatError(f"지원하지 않는 컨테이너 버전: {version}")
    try:
        header = json.loads(body[10:10 + header_len].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise WeightFormatError(f"컨테이너 헤더 파싱 실패: {e}") from e

    offset = 10 + header_len
    tensors = {}
    for entry in header['tensors']:
        shape = tuple(entry['shape'])
        count = int(np.prod(shape, dtype=np.int64))
        chunk = body[offset:offset + 4 * count]
        if len(chunk) != 4 * count:
            raise WeightFormatError(f"텐서 데이터가 잘렸습니다: {entry['name']}")
        tensors[entry['name']] = np.frombuffer(chunk, dtype='<f4').astype(np.float64).reshape(shape)
        offset += 4 * count
    if offset != len(body):
        raise WeightFormatError(f"컨테이너 끝에 남는 데이터가 있습니다: {len(body) - offset}바이트")

    layers = tuple(
        LayerSpec(l['name'], LayerKind(l['kind']), l['in'], l['out'], l['kernel'], l['stride'],
                  Activation(l['activation']), PoolKind(l['pool']))
        for l in header['layers']
    )
    weights = {l.name: tensors[f'{l.name}.weight'] for l in layers if l.has_weights}
    biases = {l.name: tensors[f'{l.name}.bias'] for l in layers if l.has_weights}
    try:
        return ModelWeights(layers, weights, biases, input_shape=tuple(header['input_shape']), name=header['name'])
    except ShapeError as e:
        raise WeightFormatError(str(e)) from e


def read_container(path: str) -> ModelWeights:
    """컨테이너 파일 읽기"""
    if not os.path.exists(path):
        raise DataError(f"가중치 컨테이너를 찾을 수 없습니다: {path}")
    with open(path, 'rb') as f:
        return parse_container(f.read())


def load_model(path: str, pool: PoolKind = PoolKind.MAX) -> ModelWeights:
    """컨테이너면 그대로, 아니면 가져오기로 모델 로드"""
    if not os.path.exists(path):
        raise DataError(f"가중치 파일을 찾을 수 없습니다: {path}")
    with open(path, 'rb') as f:
        magic = f.read(4)
    if magic == CONTAINER_MAGIC:
        return read_container(path)
    return import_weights(path, pool=pool)
