"""
SCBench 프로젝트 - 신경망 모델 정의
레이어 명세, 가중치 묶음, 데이터셋, 백엔드 교체형 순전파와 정확도 평가
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Tuple

import numpy as np
import pandas as pd

from src.accelerator.latency import CycleReport
from src.utils.errors import DataError, ShapeError

logger = logging.getLogger(__name__)

NUM_CLASSES = 10


class LayerKind(Enum):
    CONV = 'conv'
    POOL = 'pool'
    FULLY_CONNECTED = 'fc'
    ACTIVATION = 'activation'


class Activation(Enum):
    RELU = 'relu'
    NONE = 'none'


class PoolKind(Enum):
    MAX = 'max'
    AVERAGE = 'average'


@dataclass(frozen=True)
class LayerSpec:
    """레이어 명세 (가중치 텐서 이름은 name)"""
    name: str
    kind: LayerKind
    in_channels: int = 0
    out_channels: int = 0
    kernel: int = 1
    stride: int = 1
    activation: Activation = Activation.NONE
    pool: PoolKind = PoolKind.MAX

    @property
    def has_weights(self) -> bool:
        return self.kind in (LayerKind.CONV, LayerKind.FULLY_CONNECTED)

    def weight_shape(self) -> Tuple[int, ...]:
        if self.kind is LayerKind.CONV:
            return (self.out_channels, self.in_channels, self.kernel, self.kernel)
        if self.kind is LayerKind.FULLY_CONNECTED:
            return (self.out_channels, self.in_channels)
        return ()

    def output_shape(self, shape: Tuple[int, int, int]) -> Tuple[int, int, int]:
        """(C, H, W) 입력에 대한 출력 형상"""
        c, h, w = shape
        if self.kind is LayerKind.CONV:
            if c != self.in_channels:
                raise ShapeError(f"{self.name}: 입력 채널 불일치 {c} != {self.in_channels}")
            if self.kernel > h or self.kernel > w:
                raise ShapeError(f"{self.name}: 커널 {self.kernel}이 입력 {h}x{w}보다 큽니다")
            return (self.out_channels, h - self.kernel + 1, w - self.kernel + 1)
        if self.kind is LayerKind.POOL:
            if h % self.stride or w % self.stride:
                raise ShapeError(f"{self.name}: {h}x{w}는 풀링 크기 {self.stride}로 나누어지지 않습니다")
            return (c, h // self.stride, w // self.stride)
        if self.kind is LayerKind.FULLY_CONNECTED:
            if c * h * w != self.in_channels:
                raise ShapeError(f"{self.name}: 입력 크기 불일치 {c * h * w} != {self.in_channels}")
            return (self.out_channels, 1, 1)
        return shape

    def mac_count(self, shape: Tuple[int, int, int]) -> int:
        """이 레이어의 MAC 연산 수"""
        out_c, out_h, out_w = self.output_shape(shape)
        if self.kind is LayerKind.CONV:
            return out_c * out_h * out_w * self.in_channels * self.kernel * self.kernel
        if self.kind is LayerKind.FULLY_CONNECTED:
            return self.in_channels * self.out_channels
        return 0


@dataclass
class ModelWeights:
    """레이어 구성과 실수 가중치/편향"""
    layers: Tuple[LayerSpec, ...]
    weights: Dict[str, np.ndarray]
    biases: Dict[str, np.ndarray]
    input_shape: Tuple[int, int, int] = (1, 32, 32)
    name: str = 'model'

    def __post_init__(self):
        self.layers = tuple(self.layers)
        self.validate()

    def validate(self):
        """레이어 형상이 이어지는지, 텐서 형상이 명세와 맞는지 확인"""
        shape = tuple(self.input_shape)
        for layer in self.layers:
            if layer.has_weights:
                if layer.name not in self.weights or layer.name not in self.biases:
                    raise ShapeError(f"{layer.name}: 가중치 또는 편향이 없습니다")
                expected = layer.weight_shape()
                if tuple(self.weights[layer.name].shape) != expected:
                    raise ShapeError(
                        f"{layer.name}: 가중치 형상 {self.weights[layer.name].shape} != {expected}"
                    )
                if tuple(self.biases[layer.name].shape) != (layer.out_channels,):
                    raise ShapeError(f"{layer.name}: 편향 형상 {self.biases[layer.name].shape}")
            shape = layer.output_shape(shape)
        return shape

    @property
    def output_shape(self) -> Tuple[int, int, int]:
        shape = tuple(self.input_shape)
        for layer in self.layers:
            shape = layer.output_shape(shape)
        return shape

    def layer_shapes(self) -> List[Tuple[LayerSpec, Tuple[int, int, int]]]:
        """(레이어, 그 레이어의 입력 형상) 목록"""
        shape = tuple(self.input_shape)
        result = []
        for layer in self.layers:
            result.append((layer, shape))
            shape = layer.output_shape(shape)
        return result

    def mac_count(self) -> int:
        return sum(layer.mac_count(shape) for layer, shape in self.layer_shapes())

    def with_pooling(self, pool: PoolKind) -> 'ModelWeights':
        """풀링 종류만 바꾼 모델"""
        layers = tuple(
            LayerSpec(l.name, l.kind, l.in_channels, l.out_channels, l.kernel, l.stride, l.activation, pool)
            if l.kind is LayerKind.POOL else l
            for l in self.layers
        )
        return ModelWeights(layers, self.weights, self.biases, self.input_shape, self.name)


@dataclass
class Dataset:
    """정규화된 입력 이미지와 레이블"""
    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.images) != len(self.labels):
            raise DataError(f"이미지/레이블 개수 불일치: {len(self.images)} != {len(self.labels)}")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= NUM_CLASSES):
            raise DataError("레이블은 0..9 범위여야 합니다")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, count: int) -> 'Dataset':
        return Dataset(self.images[:count], self.labels[:count])


def relu(v):
    """max(0, v)"""
    return np.maximum(v, 0)


def pool2d(x: np.ndarray, size: int, kind: PoolKind = PoolKind.MAX) -> np.ndarray:
    """(..., C, H, W) 텐서의 size×size 스트라이드 size 풀링"""
    *lead, c, h, w = x.shape
    blocks = x.reshape(*lead, c, h // size, size, w // size, size)
    if kind is PoolKind.AVERAGE:
        return blocks.mean(axis=(-3, -1))
    return blocks.max(axis=(-3, -1))


def im2col(x: np.ndarray, kernel: int) -> np.ndarray:
    """
    (B, C, H, W) 입력을 (B, OH, OW, C*k*k) 패치로 펼침

    패치 원소 순서는 (채널, 커널 행, 커널 열)로 가중치 (O, C, k, k)의 reshape와 같다.
    """
    windows = np.lib.stride_tricks.sliding_window_view(x, (kernel, kernel), axis=(2, 3))
    # (B, C, OH, OW, k, k) -> (B, OH, OW, C, k, k)
    windows = windows.transpose(0, 2, 3, 1, 4, 5)
    b, oh, ow = windows.shape[:3]
    return windows.reshape(b, oh, ow, -1)


@dataclass
class ForwardResult:
    """순전파 결과: 클래스 점수와 사이클 집계"""
    scores: np.ndarray
    report: CycleReport

    @property
    def predictions(self) -> np.ndarray:
        return predict(self.scores)


def predict(scores: np.ndarray) -> np.ndarray:
    """argmax (동점이면 가장 작은 클래스 번호)"""
    return np.argmax(np.asarray(scores), axis=-1)


def run_model(model: ModelWeights, images: np.ndarray, backend, seed: int = 0,
              first_index: int = 0) -> ForwardResult:
    """
    배치 순전파

    Args:
        model: 모델
        images: (B, C, H, W) 또는 (C, H, W) 입력
        backend: ArithmeticBackend
        seed: 마스터 시드
        first_index: 배치 첫 이미지의 데이터셋 인덱스 (이미지별 시드 파생)

    Returns:
        ForwardResult (scores 형상 (B, 10) 또는 (10,))
    """
    x = np.asarray(images, dtype=np.float64)
    single = x.ndim == 3
    if single:
        x = x[None]
    if tuple(x.shape[1:]) != tuple(model.input_shape):
        raise ShapeError(f"입력 형상 {x.shape[1:]} != 모델 입력 {model.input_shape}")

    report = backend.new_report()
    image_indices = np.arange(first_index, first_index + len(x))
    x = backend.convert_in(x)

    for index, (layer, shape) in enumerate(model.layer_shapes()):
        if layer.kind is LayerKind.CONV:
            patches = im2col(x, layer.kernel)
            weights = model.weights[layer.name].reshape(layer.out_channels, -1)
            y, cycles = backend.mac_array(patches, weights, model.biases[layer.name],
                                          seed=seed, layer=index, images=image_indices,
                                          row_size=layer.kernel)
            x = y.transpose(0, 3, 1, 2)
        elif layer.kind is LayerKind.FULLY_CONNECTED:
            flat = x.reshape(len(x), -1)
            y, cycles = backend.mac_array(flat, model.weights[layer.name], model.biases[layer.name],
                                          seed=seed, layer=index, images=image_indices,
                                          row_size=1)
            x = y.reshape(len(x), layer.out_channels, 1, 1)
        elif layer.kind is LayerKind.POOL:
            x = pool2d(x, layer.stride, layer.pool)
            continue
        else:
            x = relu(x) if layer.activation is Activation.RELU else x
            continue

        if layer.activation is Activation.RELU:
            x = relu(x)
        report.layer_cycles[layer.name] = report.layer_cycles.get(layer.name, 0) + cycles
        report.total_cycles += cycles
        report.mac_ops += layer.mac_count(shape) * len(image_indices)

    scores = backend.convert_out(x.reshape(len(x), -1))
    return ForwardResult(scores[0] if single else scores, report)


def forward(model: ModelWeights, image: np.ndarray, backend, seed: int = 0, image_index: int = 0) -> np.ndarray:
    """단일 이미지(또는 배치) 클래스 점수"""
    return run_model(model, image, backend, seed=seed, first_index=image_index).scores


def _evaluate_batch(args) -> Tuple[int, CycleReport]:
    model, images, labels, backend, seed, first_index = args
    result = run_model(model, images, backend, seed=seed, first_index=first_index)
    return int(np.sum(result.predictions == labels)), result.report


def evaluate_accuracy(model: ModelWeights, dataset: Dataset, backend, seed: int = 0,
                      batch_size: int = 100, jobs: int = 1) -> Tuple[float, CycleReport]:
    """
    데이터셋 정확도 평가

    이미지별 시드는 데이터셋 인덱스로 파생되므로 batch_size, jobs와 무관하게 결과가 같다.

    Args:
        jobs: 배치 단위 병렬 작업자 수

    Returns:
        (정답 비율, 전체 CycleReport)
    """
    if len(dataset) == 0:
        raise DataError("빈 데이터셋으로는 정확도를 평가할 수 없습니다")

    start_time = time.time()
    correct = 0
    report = backend.new_report()
    work = [
        (model, dataset.images[start:start + batch_size], dataset.labels[start:start + batch_size],
         backend, seed, start)
        for start in range(0, len(dataset), batch_size)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate_batch, work))
    else:
        results = [_evaluate_batch(w) for w in work]
    for batch_correct, batch_report in results:
        correct += batch_correct
        report = report.merge(batch_report)

    accuracy = correct / len(dataset)
    logger.info(
        f"정확도 평가 완료: backend={backend.name}, {correct}/{len(dataset)} = {accuracy:.4f}, "
        f"소요 시간 {time.time() - start_time:.2f}초"
    )
    return accuracy, report


def bitwidth_sweep(model: ModelWeights, dataset: Dataset, int_bits: Iterable[int],
                   frac_bits: Iterable[int], backend_factory=None) -> pd.DataFrame:
    """
    고정소수점 정수/소수 비트 폭별 정확도 표

    Args:
        backend_factory: (int_bits, frac_bits) -> 백엔드, 기본은 FixedBackend

    Returns:
        int_bits, frac_bits, accuracy 열의 DataFrame
    """
    if backend_factory is None:
        from src.nn.backends import FixedBackend
        backend_factory = FixedBackend

    rows = []
    for i in int_bits:
        for f in frac_bits:
            accuracy, _ = evaluate_accuracy(model, dataset, backend_factory(i, f))
            rows.append({'int_bits': i, 'frac_bits': f, 'accuracy': accuracy})
            logger.debug(f"비트 폭 스윕: int={i}, frac={f}, accuracy={accuracy:.4f}")
    return pd.DataFrame(rows, columns=['int_bits', 'frac_bits', 'accuracy'])
