"""
SPDD descriptor files for AMOS-VPR

Little-endian binary::

    magic "SPDD" | version u32 | count u32 | dim u32
    per descriptor: image id u32 | dim float32 values

A sidecar ``<file>.txt`` manifest maps ids to image paths and records the
source layer and encoder.
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence

import numpy as np

from core.encoding.pooling import Descriptor
from core.errors import DescriptorFormatError, InputError, ShapeError
from core.utils.logger import setup_logger

logger = setup_logger(__name__)

MAGIC = b"SPDD"
VERSION = 1
HEADER = struct.Struct("<4sIII")
F32 = np.dtype("<f4")


@dataclass
class DescriptorSet:
    """Descriptors of one traverse with their image ids and paths"""
    descriptors: List[Descriptor]
    ids: List[int]
    paths: List[str]

    def __len__(self) -> int:
        return len(self.descriptors)

    @property
    def dim(self) -> int:
        return self.descriptors[0].dim if self.descriptors else 0

    def matrix(self) -> np.ndarray:
        return np.stack([d.values for d in self.descriptors]) if self.descriptors else np.zeros((0, 0), np.float32)


def manifest_path(path: str) -> Path:
    return Path(str(path) + ".txt")


def encode_descriptors(descriptors: Sequence[Descriptor], ids: Sequence[int]) -> bytes:
    if len(descriptors) != len(ids):
        raise ShapeError(f"{len(descriptors)} descriptors but {len(ids)} image ids")
    dim = descriptors[0].dim if descriptors else 0
    chunks = [HEADER.pack(MAGIC, VERSION, len(descriptors), dim)]
    for image_id, desc in zip(ids, descriptors):
        if desc.dim != dim:
            raise ShapeError(f"descriptor for image {image_id} has dim {desc.dim}, expected {dim}")
        chunks.append(struct.pack("<I", image_id))
        chunks.append(np.ascontiguousarray(desc.values, dtype=F32).tobytes())
    return b"".join(chunks)


def save_descriptors(dset: DescriptorSet, path: str):
    """Write the binary file and its sidecar manifest"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(encode_descriptors(dset.descriptors, dset.ids))
    first = dset.descriptors[0] if dset.descriptors else Descriptor(np.zeros(0, np.float32))
    lines = [f"# layer={first.source_layer}", f"# encoder={first.encoder}"]
    lines += [f"{image_id}\t{p}" for image_id, p in zip(dset.ids, dset.paths)]
    manifest_path(path).write_text("\n".join(lines) + "\n")
    logger.info(f"Saved {len(dset)} descriptors (dim {dset.dim}) to {path}")


def decode_descriptors(data: bytes, layer: str = "", encoder: str = "") -> List[tuple]:
    """(image id, Descriptor) pairs from SPDD bytes"""
    if len(data) < HEADER.size:
        raise DescriptorFormatError(f"descriptor file truncated: {len(data)} bytes, header needs {HEADER.size}")
    magic, version, count, dim = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DescriptorFormatError(f"not an SPDD descriptor file (magic {magic!r})")
    if version != VERSION:
        raise DescriptorFormatError(f"descriptor file version {version}, this build reads version {VERSION}")
    record = 4 + 4 * dim
    expected = HEADER.size + count * record
    if len(data) != expected:
        raise DescriptorFormatError(f"descriptor file holds {len(data)} bytes, header promises {expected}")
    entries = []
    for i in range(count):
        offset = HEADER.size + i * record
        (image_id,) = struct.unpack_from("<I", data, offset)
        values = np.frombuffer(data, dtype=F32, count=dim, offset=offset + 4).astype(np.float32)
        entries.append((image_id, Descriptor(values, layer, encoder)))
    return entries


def load_descriptors(path: str) -> DescriptorSet:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise InputError(f"cannot read descriptor file {path}: {e}")
    layer = encoder = ""
    paths = {}
    sidecar = manifest_path(path)
    if sidecar.exists():
        for lineno, line in enumerate(sidecar.read_text().splitlines(), 1):
            if line.startswith("# layer="):
                layer = line[len("# layer="):]
            elif line.startswith("# encoder="):
                encoder = line[len("# encoder="):]
            elif line.strip() and not line.startswith("#"):
                image_id, sep, image_path = line.partition("\t")
                if not sep or not image_id.isdigit():
                    raise DescriptorFormatError(f"{sidecar}:{lineno}: expected 'id<TAB>path'")
                paths[int(image_id)] = image_path
    entries = decode_descriptors(data, layer, encoder)
    return DescriptorSet(
        [d for _, d in entries],
        [i for i, _ in entries],
        [paths.get(i, "") for i, _ in entries],
    )
