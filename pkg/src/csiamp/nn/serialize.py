"""Binary model files.

Layout (little-endian)::

    b"MLPW" | version u8 | name_len u16 | name utf-8
    in_dim u32 | out_dim u32 | n_layers u32 | has_bn u8
    [momentum f64 | eps f64 | gamma | beta | running_mean | running_var]   (f64 x in_dim each)
    per layer: in u32 | out u32 | activation u8 | alpha f64 | weight (out*in f64, row-major) | bias (out f64)
    crc32 u32 over all preceding bytes
"""

import io
import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import ChecksumError, DataError, FormatVersionError
from .layers import LINEAR, LRELU, BatchNorm, DenseLayer, MlpModel

MAGIC = b"MLPW"
VERSION = 1
_ACT_CODES = {LINEAR: 0, LRELU: 1}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}


def _f64(a) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def model_to_bytes(model: MlpModel) -> bytes:
    buf = io.BytesIO()
    name = model.name.encode("utf-8")
    buf.write(MAGIC)
    buf.write(struct.pack("<BH", VERSION, len(name)))
    buf.write(name)
    bn = model.input_bn
    buf.write(struct.pack("<IIIB", model.in_dim, model.out_dim, len(model.layers), bn is not None))
    if bn is not None:
        buf.write(struct.pack("<dd", bn.momentum, bn.eps))
        for arr in (bn.gamma, bn.beta, bn.running_mean, bn.running_var):
            buf.write(_f64(arr))
    for layer in model.layers:
        buf.write(struct.pack("<IIBd", layer.in_dim, layer.out_dim, _ACT_CODES[layer.activation], layer.alpha))
        buf.write(_f64(layer.weight))
        buf.write(_f64(layer.bias))
    body = buf.getvalue()
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes, pos: int):
        self.data = data
        self.pos = pos

    def unpack(self, fmt: str):
        vals = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += struct.calcsize(fmt)
        return vals

    def floats(self, count: int, shape=None) -> np.ndarray:
        arr = np.frombuffer(self.data, dtype="<f8", count=count, offset=self.pos).astype(np.float64)
        self.pos += 8 * count
        return arr.reshape(shape) if shape is not None else arr


def model_from_bytes(data: bytes) -> MlpModel:
    if len(data) < 5 or data[:4] != MAGIC:
        raise DataError("not a model file (bad magic)")
    if data[4] != VERSION:
        raise FormatVersionError(f"model format version {data[4]} is not supported (expected {VERSION})")
    if len(data) < 9:
        raise ChecksumError("model file truncated")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise ChecksumError("model file checksum mismatch (truncated or corrupted)")
    try:
        r = _Reader(body, 5)
        (name_len,) = r.unpack("<H")
        name = body[r.pos:r.pos + name_len].decode("utf-8")
        r.pos += name_len
        in_dim, out_dim, n_layers, has_bn = r.unpack("<IIIB")
        bn = None
        if has_bn:
            momentum, eps = r.unpack("<dd")
            gamma, beta, rmean, rvar = (r.floats(in_dim) for _ in range(4))
            bn = BatchNorm(gamma, beta, rmean, rvar, momentum, eps)
        layers = []
        for _ in range(n_layers):
            lin, lout, act, alpha = r.unpack("<IIBd")
            w = r.floats(lin * lout, (lout, lin))
            b = r.floats(lout)
            layers.append(DenseLayer(w, b, _ACT_NAMES[act], alpha))
        if r.pos != len(body):
            raise DataError("trailing bytes in model file")
    except (struct.error, ValueError, KeyError) as exc:
        raise DataError(f"malformed model file: {exc}") from exc
    model = MlpModel(layers, bn, name)
    if model.in_dim != in_dim or model.out_dim != out_dim:
        raise DataError("model header dims disagree with layer descriptors")
    return model


def save_model(model: MlpModel, path) -> None:
    Path(path).write_bytes(model_to_bytes(model))


def load_model(path) -> MlpModel:
    return model_from_bytes(Path(path).read_bytes())
