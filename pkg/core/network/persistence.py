"""
SPDN model files for AMOS-VPR

Little-endian layout::

    magic "SPDN" | version u32 | entry count u32
    per entry: name length u16 | UTF-8 name | kind tag u8 | rank u8 | dims u32 * rank | float32 payload
    CRC32 u32 of everything before it

One entry per layer in network order, preceded by an input entry named after
the network (dims = input shape) and optionally followed by a ``__mean__`` entry holding
the per-channel dataset mean. Layer geometry rides in the dims:

    conv     dims (out, in, k, k, stride, pad)   payload weights then biases
    fc       dims (out, in)                      payload weights then biases
    maxpool  dims (window, stride)               no payload
    relu, softmax                                rank 0, no payload
"""

import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.errors import (
    BadMagicError,
    ChecksumError,
    InputError,
    ModelFormatError,
    TruncatedFileError,
    VersionMismatchError,
    VPRError,
)
from core.network.model import LayerParams, ModelWeights
from core.network.spec import LayerKind, LayerSpec, NetworkSpec, infer_shapes
from core.utils.logger import setup_logger

logger = setup_logger(__name__)

MAGIC = b"SPDN"
VERSION = 1
TAG_INPUT = 0
TAG_MEAN = 6
MEAN_ENTRY = "__mean__"
F32 = np.dtype("<f4")
# no layer of a real network has a dimension this large
MAX_DIM = 1 << 16


def _entry(name: str, tag: int, dims: Tuple[int, ...], payload: bytes = b"") -> bytes:
    encoded = name.encode("utf-8")
    header = struct.pack("<H", len(encoded)) + encoded + struct.pack("<BB", tag, len(dims))
    header += struct.pack(f"<{len(dims)}I", *dims)
    return header + payload


def _floats(*arrays: np.ndarray) -> bytes:
    return b"".join(np.ascontiguousarray(a, dtype=F32).tobytes() for a in arrays)


def encode_model(spec: NetworkSpec, weights: ModelWeights) -> bytes:
    """Serialize a network and its weights to SPDN bytes"""
    weights.check(spec)
    entries: List[bytes] = [_entry(spec.name, TAG_INPUT, spec.input_shape)]
    for layer in spec.layers:
        tag = layer.kind.value
        if layer.kind is LayerKind.CONV:
            p = weights[layer.name]
            out_c, in_c, k, _ = p.weight.shape
            entries.append(_entry(layer.name, tag, (out_c, in_c, k, k, layer.stride, layer.pad),
                                  _floats(p.weight, p.bias)))
        elif layer.kind is LayerKind.FC:
            p = weights[layer.name]
            entries.append(_entry(layer.name, tag, p.weight.shape, _floats(p.weight, p.bias)))
        elif layer.kind is LayerKind.MAXPOOL:
            entries.append(_entry(layer.name, tag, (layer.window, layer.stride)))
        else:
            entries.append(_entry(layer.name, tag, ()))
    if weights.mean is not None:
        entries.append(_entry(MEAN_ENTRY, TAG_MEAN, weights.mean.shape, _floats(weights.mean)))

    body = MAGIC + struct.pack("<II", VERSION, len(entries)) + b"".join(entries)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


class _Reader:
    """Bounds-checked cursor; running past the CRC trailer means truncation"""

    def __init__(self, data: bytes, limit: int):
        self.data = data
        self.limit = limit
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > self.limit:
            raise TruncatedFileError(f"model file truncated at byte {self.pos} (needed {n} more)")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * count), dtype=F32).astype(np.float32)


@dataclass
class _Entries:
    input_shape: Optional[Tuple[int, ...]] = None
    network_name: str = "custom"
    layers: List[LayerSpec] = field(default_factory=list)
    params: Dict[str, LayerParams] = field(default_factory=dict)
    mean: Optional[np.ndarray] = None
    end: int = 0


def _check_header(name: str, tag: int, dims: Tuple[int, ...], channels: int, features: int):
    """Geometry of one entry against the entries before it"""
    if any(d > MAX_DIM for d in dims):
        raise ModelFormatError(f"entry {name!r}: implausible dims {dims}")
    if tag == LayerKind.CONV.value and len(dims) == 6:
        if dims[2] != dims[3] or (channels and dims[1] != channels):
            raise ModelFormatError(f"entry {name!r}: conv dims {dims} do not follow {channels} channels")
    elif tag == LayerKind.FC.value and len(dims) == 2:
        if features and dims[1] != features:
            raise ModelFormatError(f"entry {name!r}: fc dims {dims} do not follow {features} features")


def _read_entries(data: bytes, limit: int) -> _Entries:
    reader = _Reader(data, limit)
    reader.take(8)
    (count,) = reader.unpack("<I")
    entries = _Entries()
    channels = features = 0
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        try:
            name = reader.take(name_len).decode("utf-8")
        except UnicodeDecodeError:
            raise ModelFormatError(f"entry name at byte {reader.pos - name_len} is not valid UTF-8")
        tag, rank = reader.unpack("<BB")
        dims = reader.unpack(f"<{rank}I") if rank else ()
        _check_header(name, tag, dims, channels, features)
        if tag == TAG_INPUT:
            entries.input_shape = tuple(dims)
            entries.network_name = name
            channels = dims[0] if dims else 0
        elif tag == TAG_MEAN:
            entries.mean = reader.floats(int(np.prod(dims)))
        elif tag == LayerKind.CONV.value and rank == 6:
            out_c, in_c, k, _, stride, pad = dims
            weight = reader.floats(out_c * in_c * k * k).reshape(out_c, in_c, k, k)
            entries.params[name] = LayerParams(weight, reader.floats(out_c))
            entries.layers.append(LayerSpec.conv(name, out_c, k, stride, pad))
            channels = out_c
        elif tag == LayerKind.FC.value and rank == 2:
            out_f, in_f = dims
            weight = reader.floats(out_f * in_f).reshape(out_f, in_f)
            entries.params[name] = LayerParams(weight, reader.floats(out_f))
            entries.layers.append(LayerSpec.fc(name, out_f))
            features = out_f
        elif tag == LayerKind.MAXPOOL.value and rank == 2:
            entries.layers.append(LayerSpec.maxpool(name, dims[0], dims[1]))
        elif tag == LayerKind.RELU.value and rank == 0:
            entries.layers.append(LayerSpec.relu(name))
        elif tag == LayerKind.SOFTMAX.value and rank == 0:
            entries.layers.append(LayerSpec.softmax(name))
        else:
            raise ModelFormatError(f"entry {name!r}: unknown kind tag {tag} with rank {rank}")
    entries.end = reader.pos
    return entries


def decode_model(data: bytes) -> Tuple[NetworkSpec, ModelWeights]:
    """Parse SPDN bytes back into the network and its weights

    The CRC is verified before any entry is trusted. On a mismatch the file is
    reported truncated only when its bytes read as a clean prefix of a
    well-formed model; anything else is a checksum failure.
    """
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError(f"not an SPDN model file (magic {data[:4]!r})")
    if len(data) < 16:
        raise TruncatedFileError(f"model file truncated: only {len(data)} bytes")
    (version,) = struct.unpack("<I", data[4:8])
    if version != VERSION:
        raise VersionMismatchError(f"model file version {version}, this build reads version {VERSION}")

    (stored_crc,) = struct.unpack("<I", data[-4:])
    actual_crc = zlib.crc32(data[:-4]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        try:
            _read_entries(data, len(data))
        except TruncatedFileError:
            raise
        except VPRError:
            pass
        raise ChecksumError(f"model file checksum mismatch (stored {stored_crc:08x}, computed {actual_crc:08x})")

    entries = _read_entries(data, len(data) - 4)
    if entries.end != len(data) - 4:
        raise ModelFormatError(f"{len(data) - 4 - entries.end} unexpected bytes before the checksum")
    layers = entries.layers
    if entries.input_shape is None or not layers:
        raise ModelFormatError("model file has no input entry or no layers")

    fc_layers = [layer for layer in layers if layer.kind is LayerKind.FC]
    num_classes = fc_layers[-1].out_features if fc_layers else layers[-1].out_channels
    spec = NetworkSpec(tuple(layers), num_classes, entries.input_shape, entries.network_name)
    infer_shapes(spec)
    weights = ModelWeights(entries.params, entries.mean)
    weights.check(spec)
    return spec, weights


def save_model(weights: ModelWeights, spec: NetworkSpec, path: str):
    """Write the model to path"""
    data = encode_model(spec, weights)
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(data)
    logger.info(f"Saved {spec.name} model ({weights.num_parameters()} parameters) to {path}")


def load_model(path: str) -> Tuple[NetworkSpec, ModelWeights]:
    """Read a model written by save_model"""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise InputError(f"cannot read model file {path}: {e}")
    spec, weights = decode_model(data)
    logger.debug(f"Loaded {spec.name} model from {path}")
    return spec, weights
