"""Binary model file format "ECN1".

Layout, all little-endian:

    magic     4 bytes  b"ECN1"
    version   u16      currently 1
    reserved  u16      0
    rate      u32      sample_rate_hz
    n_layers  u32
    layers    n_layers x (kind u8, p0 u32, p1 u32, p2 u32)
    arrays    raw float32 weight/bias data in spec traversal order
    crc       u32      CRC-32 of everything above

Layer kinds: 1 conv2d (p = kernel_w, out_channels, stride), 2 conv1d
(kernel, out_channels, stride), 3 maxpool (width), 4 global average pool,
5 dense (out_features). Array shapes are derived from the layer table, so the
weight region carries no per-array headers. A full description lives in
docs/model-format.md.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import BadMagic, CrcMismatch, TruncatedFile
from .net import (
    Conv1d,
    Conv2d,
    Dense,
    GlobalAvgPool,
    MaxPool,
    ModelSpec,
    param_shapes,
    validate_params,
)

MAGIC = b"ECN1"
FORMAT_VERSION = 1

_KIND_CONV2D = 1
_KIND_CONV1D = 2
_KIND_MAXPOOL = 3
_KIND_GAP = 4
_KIND_DENSE = 5

_LAYER_STRUCT = struct.Struct("<BIII")
_HEADER_STRUCT = struct.Struct("<4sHHII")


def _layer_record(layer) -> tuple[int, int, int, int]:
    if isinstance(layer, Conv2d):
        return _KIND_CONV2D, layer.kernel[1], layer.out_channels, layer.stride
    if isinstance(layer, Conv1d):
        return _KIND_CONV1D, layer.kernel, layer.out_channels, layer.stride
    if isinstance(layer, MaxPool):
        return _KIND_MAXPOOL, layer.width, 0, 0
    if isinstance(layer, GlobalAvgPool):
        return _KIND_GAP, 0, 0, 0
    if isinstance(layer, Dense):
        return _KIND_DENSE, layer.out_features, 0, 0
    raise ValueError(f"unknown layer {layer!r}")


def _layer_from_record(kind: int, p0: int, p1: int, p2: int):
    if kind == _KIND_CONV2D:
        return Conv2d(out_channels=p1, kernel=(2, p0), stride=p2)
    if kind == _KIND_CONV1D:
        return Conv1d(out_channels=p1, kernel=p0, stride=p2)
    if kind == _KIND_MAXPOOL:
        return MaxPool(width=p0)
    if kind == _KIND_GAP:
        return GlobalAvgPool()
    if kind == _KIND_DENSE:
        return Dense(out_features=p0)
    raise ValueError(f"unknown layer kind {kind}")


def save_model(spec: ModelSpec, params: list[np.ndarray], path: str | Path) -> None:
    """Write spec and parameters; the round trip is bit-exact."""
    validate_params(spec, params)
    blob = bytearray()
    blob += _HEADER_STRUCT.pack(MAGIC, FORMAT_VERSION, 0,
                                spec.sample_rate_hz, len(spec.layers))
    for layer in spec.layers:
        blob += _LAYER_STRUCT.pack(*_layer_record(layer))
    for arr in params:
        blob += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    blob += struct.pack("<I", zlib.crc32(bytes(blob)))
    Path(path).write_bytes(bytes(blob))


def load_model(path: str | Path) -> tuple[ModelSpec, list[np.ndarray]]:
    """Read a model file back, verifying structure and checksum."""
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise TruncatedFile(f"{path}: {len(raw)} bytes")
    if raw[:4] != MAGIC:
        raise BadMagic(f"{path}: magic {raw[:4]!r}")
    if len(raw) < _HEADER_STRUCT.size:
        raise TruncatedFile(f"{path}: header incomplete")
    _, version, _, rate, n_layers = _HEADER_STRUCT.unpack_from(raw, 0)
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")

    pos = _HEADER_STRUCT.size
    layers = []
    for _ in range(n_layers):
        if pos + _LAYER_STRUCT.size > len(raw):
            raise TruncatedFile(f"{path}: layer table incomplete")
        layers.append(_layer_from_record(*_LAYER_STRUCT.unpack_from(raw, pos)))
        pos += _LAYER_STRUCT.size
    spec = ModelSpec(sample_rate_hz=rate, layers=tuple(layers))

    shapes = param_shapes(spec)
    weight_bytes = sum(int(np.prod(s)) for s in shapes) * 4
    expected_len = pos + weight_bytes + 4
    if len(raw) < expected_len:
        raise TruncatedFile(f"{path}: {len(raw)} bytes, expected {expected_len}")
    if len(raw) > expected_len:
        raise TruncatedFile(f"{path}: {len(raw) - expected_len} trailing bytes")

    (stored_crc,) = struct.unpack_from("<I", raw, len(raw) - 4)
    if zlib.crc32(raw[:-4]) != stored_crc:
        raise CrcMismatch(f"{path}: checksum mismatch")

    params = []
    for shape in shapes:
        count = int(np.prod(shape))
        arr = np.frombuffer(raw, dtype="<f4", count=count, offset=pos)
        params.append(arr.reshape(shape).astype(np.float32))
        pos += count * 4
    validate_params(spec, params)
    return spec, params
