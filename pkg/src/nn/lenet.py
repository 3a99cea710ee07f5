"""
SCBench 프로젝트 - LeNet-5 및 합성 검증 모델
3개 컨볼루션 + 1개 완전연결 레이어 구성, 입력 전처리, 가중치 없이 쓰는 합성 모델
"""

import logging
from typing import Tuple

import numpy as np

from src.nn.model import (
    Activation, Dataset, LayerKind, LayerSpec, ModelWeights, PoolKind,
    im2col, pool2d, relu,
)
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

LENET_INPUT = (1, 32, 32)
MNIST_PADDING = 2
NORMALIZATION_MODES = ('unit', 'standardize')
DEFAULT_NORMALIZATION = 'unit'


def lenet5_layers(pool: PoolKind = PoolKind.MAX) -> Tuple[LayerSpec, ...]:
    """32×32 입력 LeNet-5: conv5(1→6) pool conv5(6→16) pool conv5(16→120) fc(120→10), fc 출력은 ReLU 없이 점수"""
    return (
        LayerSpec('conv1', LayerKind.CONV, 1, 6, kernel=5, activation=Activation.RELU),
        LayerSpec('pool1', LayerKind.POOL, 6, 6, kernel=2, stride=2, pool=pool),
        LayerSpec('conv2', LayerKind.CONV, 6, 16, kernel=5, activation=Activation.RELU),
        LayerSpec('pool2', LayerKind.POOL, 16, 16, kernel=2, stride=2, pool=pool),
        LayerSpec('conv3', LayerKind.CONV, 16, 120, kernel=5, activation=Activation.RELU),
        LayerSpec('fc', LayerKind.FULLY_CONNECTED, 120, 10),
    )


def prepare_images(images: np.ndarray, mode: str = DEFAULT_NORMALIZATION, padding: int = MNIST_PADDING) -> np.ndarray:
    """
    28×28 uint8 이미지를 네트워크 입력 (N, 1, 32, 32)으로 변환

    Args:
        images: (N, H, W) 픽셀 (0..255)
        mode: 'unit' ([0, 1), 기본) 또는 'standardize' (이미지별 평균 0, 표준편차 1,
              획이 적은 이미지는 고정소수점 상한을 넘을 수 있음)
        padding: 가장자리 0 패딩 폭

    Returns:
        (N, 1, H + 2p, W + 2p) 실수 배열
    """
    if mode not in NORMALIZATION_MODES:
        raise ConfigError(f"알 수 없는 정규화 방식: {mode} (사용 가능: {', '.join(NORMALIZATION_MODES)})")

    pixels = np.asarray(images, dtype=np.float64)
    if mode == 'unit':
        normalized = pixels / 256.0
    else:
        mean = pixels.mean(axis=(1, 2), keepdims=True)
        std = pixels.std(axis=(1, 2), keepdims=True)
        normalized = (pixels - mean) / np.where(std == 0, 1.0, std)

    padded = np.pad(normalized, ((0, 0), (padding, padding), (padding, padding)))
    return padded[:, None, :, :]


def _float_features(layers, weights, biases, x: np.ndarray, upto: int) -> np.ndarray:
    """앞쪽 upto개 레이어의 실수 순전파 (합성 모델 보정용)"""
    for layer in layers[:upto]:
        if layer.kind is LayerKind.CONV:
            patches = im2col(x, layer.kernel)
            y = patches @ weights[layer.name].reshape(layer.out_channels, -1).T + biases[layer.name]
            x = y.transpose(0, 3, 1, 2)
        elif layer.kind is LayerKind.POOL:
            x = pool2d(x, layer.stride, layer.pool)
            continue
        if layer.activation is Activation.RELU:
            x = relu(x)
    return x


def synthetic_prototypes(seed: int = 0, size: int = 16) -> np.ndarray:
    """클래스별 이진 패턴 원형 (10, 1, size, size)"""
    rng = np.random.default_rng(seed)
    return (rng.random((10, 1, size, size)) < 0.3).astype(np.float64)


def build_synthetic_model(seed: int = 0, peak_activation: float = 2.0) -> ModelWeights:
    """
    가중치 없이 쓰는 합성 3-conv + 1-FC 모델

    컨볼루션 가중치는 무작위로 만들고 레이어마다 원형 입력에서의 최대 활성값이
    peak_activation이 되도록 스케일한다. FC 헤드는 클래스 원형의 특징 벡터를
    중심화한 템플릿으로 만든다.
    """
    rng = np.random.default_rng(seed)
    layers = (
        LayerSpec('conv1', LayerKind.CONV, 1, 4, kernel=3, activation=Activation.RELU),
        LayerSpec('pool1', LayerKind.POOL, 4, 4, kernel=2, stride=2),
        LayerSpec('conv2', LayerKind.CONV, 4, 8, kernel=2, activation=Activation.RELU),
        LayerSpec('pool2', LayerKind.POOL, 8, 8, kernel=2, stride=2),
        LayerSpec('conv3', LayerKind.CONV, 8, 16, kernel=3, activation=Activation.RELU),
        LayerSpec('fc', LayerKind.FULLY_CONNECTED, 16, 10),
    )
    prototypes = synthetic_prototypes(seed)
    weights, biases = {}, {}

    for index, layer in enumerate(layers):
        if layer.kind is not LayerKind.CONV:
            continue
        w = rng.normal(0.0, 1.0, layer.weight_shape())
        weights[layer.name] = w
        biases[layer.name] = np.zeros(layer.out_channels)
        # 보정 전 사전 활성값으로 스케일 결정
        inputs = _float_features(layers, weights, biases, prototypes, index)
        pre = im2col(inputs, layer.kernel) @ w.reshape(layer.out_channels, -1).T
        peak = float(np.abs(pre).max()) or 1.0
        weights[layer.name] = w * (peak_activation / peak)

    features = _float_features(layers, weights, biases, prototypes, len(layers) - 1).reshape(10, -1)
    center = features.mean(axis=0)
    templates = features - center
    radius = float(np.mean(np.linalg.norm(templates, axis=1))) or 1.0
    fc_w = templates / radius ** 2
    weights['fc'] = fc_w
    biases['fc'] = 1.0 - fc_w @ center

    logger.debug(f"합성 모델 생성: seed={seed}, feature radius={radius:.3f}")
    return ModelWeights(layers, weights, biases, input_shape=(1, 16, 16), name=f'synthetic-{seed}')


def synthetic_inputs(count: int, seed: int = 0, noise: float = 0.05, model_seed: int = 0) -> Dataset:
    """원형에 가우시안 잡음을 더한 합성 입력과 레이블"""
    rng = np.random.default_rng(seed)
    prototypes = synthetic_prototypes(model_seed)
    labels = rng.integers(0, 10, size=count)
    images = prototypes[labels] + rng.normal(0.0, noise, (count,) + prototypes.shape[1:])
    return Dataset(np.clip(images, 0.0, 1.0), labels)
