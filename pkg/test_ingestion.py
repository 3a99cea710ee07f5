"""
SCBench 프로젝트 - MNIST/가중치 입력 테스트
"""

import gzip
import struct

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.ingestion.mnist import MNIST_TEST_FILES, load_mnist, locate_mnist, parse_idx, read_idx, write_idx
from src.ingestion.weights import (
    LENET_DUMP_DOUBLES, LENET_DUMP_LAYOUT, container_bytes, export_container, import_weights,
    infer_layers, load_model, model_checksum, parse_container, read_container,
)
from src.nn.model import Activation, LayerKind, PoolKind
from src.utils.errors import DataError, IdxFormatError, WeightFormatError


@pytest.fixture
def mnist_dir(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, (12, 28, 28), dtype=np.uint8)
    labels = rng.integers(0, 10, 12, dtype=np.uint8)
    write_idx(str(tmp_path / MNIST_TEST_FILES[0]), images)
    with open(tmp_path / f'{MNIST_TEST_FILES[1]}.gz', 'wb') as f:
        idx = struct.pack('>II', 0x0801, 12) + labels.tobytes()
        f.write(gzip.compress(idx))
    return tmp_path, images, labels


# ===== IDX =====

def test_parse_idx_header():
    data = struct.pack('>IIII', 0x0803, 2, 2, 3) + bytes(range(12))
    idx = parse_idx(data)
    assert idx.dims == (2, 2, 3)
    assert idx.type_code == 0x08
    assert_array_equal(idx.array()[1, 1], [9, 10, 11])


def test_parse_idx_is_gzip_transparent():
    data = struct.pack('>II', 0x0801, 3) + bytes([1, 2, 3])
    assert parse_idx(gzip.compress(data)).payload == bytes([1, 2, 3])


@pytest.mark.parametrize('data', [
    b'\x00\x00',
    struct.pack('>II', 0x0701, 1) + b'\x00',
    struct.pack('>II', 0x01080001, 1) + b'\x00',
    struct.pack('>I', 0x0803) + b'\x00\x00\x00\x02',
    struct.pack('>II', 0x0801, 4) + b'\x00\x00\x00',
])
def test_parse_idx_errors(data):
    with pytest.raises(IdxFormatError):
        parse_idx(data)


def test_write_idx_round_trip(tmp_path):
    values = np.arange(-6, 6, dtype=np.int16).reshape(3, 4)
    path = str(tmp_path / 'values.idx')
    write_idx(path, values)
    assert_array_equal(read_idx(path).array(), values)
    with pytest.raises(IdxFormatError):
        write_idx(path, np.zeros(3, dtype=np.uint64))


def test_read_idx_missing(tmp_path):
    with pytest.raises(DataError):
        read_idx(str(tmp_path / 'missing'))


def test_load_mnist(mnist_dir):
    directory, images, labels = mnist_dir
    images_path, labels_path = locate_mnist(str(directory))
    assert labels_path.endswith('.gz')
    data = load_mnist(images_path, labels_path, limit=5, mode='unit')
    assert data.images.shape == (5, 1, 32, 32)
    assert_array_equal(data.labels, labels[:5])
    assert_allclose(data.images[:, 0, 2:30, 2:30], images[:5] / 256.0)


def test_load_mnist_errors(mnist_dir, tmp_path):
    directory, _, _ = mnist_dir
    images_path, labels_path = locate_mnist(str(directory))
    with pytest.raises(DataError):
        load_mnist(images_path, labels_path, limit=0)
    with pytest.raises(IdxFormatError):
        load_mnist(labels_path, labels_path)

    bad_labels = str(tmp_path / 'bad-labels')
    write_idx(bad_labels, np.full(12, 10, dtype=np.uint8))
    with pytest.raises(IdxFormatError):
        load_mnist(images_path, bad_labels)

    short_labels = str(tmp_path / 'short-labels')
    write_idx(short_labels, np.zeros(11, dtype=np.uint8))
    with pytest.raises(IdxFormatError):
        load_mnist(images_path, short_labels)


def test_locate_mnist_missing(tmp_path):
    with pytest.raises(DataError):
        locate_mnist(str(tmp_path))


# ===== 가중치 =====

def write_lenet_dump(path, seed=0):
    data = np.random.default_rng(seed).normal(0.0, 0.1, LENET_DUMP_DOUBLES)
    data.astype('<f8').tofile(path)
    return data


def test_import_lenet_dump(tmp_path):
    path = str(tmp_path / 'lenet.bin')
    data = write_lenet_dump(path)
    model = import_weights(path)

    kinds = [layer.kind for layer in model.layers]
    assert kinds == [LayerKind.CONV, LayerKind.POOL, LayerKind.CONV, LayerKind.POOL,
                     LayerKind.CONV, LayerKind.FULLY_CONNECTED]
    assert model.output_shape == (10, 1, 1)
    assert model.weights['conv2'].shape == (16, 6, 5, 5)

    first = data[:150].reshape(LENET_DUMP_LAYOUT[0][1])
    assert_array_equal(model.weights['conv1'][3, 0], first[0, 3])
    assert_array_equal(model.biases['fc'], data[-10:])
    # 마지막 fc는 점수를 그대로 내보냄
    assert model.layers[-1].activation is Activation.NONE
    assert all(l.activation is Activation.RELU for l in model.layers if l.kind is LayerKind.CONV)


def test_import_lenet_dump_errors(tmp_path):
    empty = tmp_path / 'empty.bin'
    empty.write_bytes(b'')
    with pytest.raises(WeightFormatError):
        import_weights(str(empty))

    short = tmp_path / 'short.bin'
    np.zeros(100, dtype='<f8').tofile(short)
    with pytest.raises(WeightFormatError):
        import_weights(str(short))

    with pytest.raises(DataError):
        import_weights(str(tmp_path / 'missing.bin'))


def small_npz(path, fc_inputs=16):
    rng = np.random.default_rng(1)
    np.savez(path, **{
        'conv1.weight': rng.normal(size=(2, 1, 3, 3)),
        'conv1.bias': rng.normal(size=2),
        'conv2.weight': rng.normal(size=(4, 2, 2, 2)),
        'conv2.bias': rng.normal(size=4),
        'fc.weight': rng.normal(size=(10, fc_inputs)),
        'fc.bias': rng.normal(size=10),
    })


def test_import_npz(tmp_path):
    path = str(tmp_path / 'small.npz')
    small_npz(path)
    model = import_weights(path, pool=PoolKind.AVERAGE, input_shape=(1, 8, 8))
    assert [l.name for l in model.layers] == ['conv1', 'pool1', 'conv2', 'fc']
    assert model.layers[1].pool is PoolKind.AVERAGE
    assert model.layers[-1].activation is Activation.NONE
    assert model.layers[0].activation is Activation.RELU
    assert model.name == 'small'


def test_import_npz_shape_mismatch(tmp_path):
    path = str(tmp_path / 'bad.npz')
    small_npz(path, fc_inputs=15)
    with pytest.raises(WeightFormatError):
        import_weights(path, input_shape=(1, 8, 8))


def test_infer_layers_rejects_unknown_rank():
    with pytest.raises(WeightFormatError):
        infer_layers([('odd', (2, 2, 2))], (1, 4, 4))


def test_container_round_trip(tmp_path):
    source = str(tmp_path / 'lenet.bin')
    write_lenet_dump(source, seed=4)
    model = import_weights(source)

    path = str(tmp_path / 'out' / 'lenet.scnw')
    digest = export_container(model, path)
    restored = read_container(path)
    assert [l.name for l in restored.layers] == [l.name for l in model.layers]
    assert_allclose(restored.weights['conv3'], model.weights['conv3'], rtol=1e-6)
    # float32 값은 다시 저장해도 같은 바이트
    assert container_bytes(restored) == container_bytes(model)
    assert model_checksum(restored) == digest
    assert load_model(path).name == 'lenet5'


def test_container_detects_corruption(tmp_path):
    path = str(tmp_path / 'small.npz')
    small_npz(path)
    data = bytearray(container_bytes(import_weights(path, input_shape=(1, 8, 8))))
    data[len(data) // 2] ^= 0xFF
    with pytest.raises(WeightFormatError):
        parse_container(bytes(data))
    with pytest.raises(WeightFormatError):
        parse_container(b'XXXX' + bytes(40))
