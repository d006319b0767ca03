#!/usr/bin/env python3
"""
Test SPDD descriptor files and their sidecar manifests
"""

import os
import struct
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from core.encoding.pooling import Descriptor
from core.encoding.store import DescriptorSet, decode_descriptors, encode_descriptors, load_descriptors, manifest_path, save_descriptors
from core.errors import DescriptorFormatError, InputError, ShapeError


@pytest.fixture
def dset():
    rng = np.random.default_rng(0)
    descriptors = [Descriptor(rng.normal(size=30).astype(np.float32), "conv2", "multiscale[1,2,3,4]") for _ in range(4)]
    return DescriptorSet(descriptors, [0, 1, 2, 3], [f"/data/traverse/{i:04d}.png" for i in range(4)])


def test_round_trip(tmp_path, dset):
    path = tmp_path / "d.spdd"
    save_descriptors(dset, str(path))
    loaded = load_descriptors(str(path))
    assert len(loaded) == 4
    assert loaded.ids == dset.ids
    assert loaded.paths == dset.paths
    np.testing.assert_array_equal(loaded.matrix(), dset.matrix())
    assert loaded.descriptors[0].source_layer == "conv2"
    assert loaded.descriptors[0].encoder == "multiscale[1,2,3,4]"
    assert manifest_path(str(path)).read_text().startswith("# layer=conv2\n# encoder=multiscale[1,2,3,4]\n")


def test_header(dset):
    data = encode_descriptors(dset.descriptors, dset.ids)
    magic, version, count, dim = struct.unpack("<4sIII", data[:16])
    assert (magic, version, count, dim) == (b"SPDD", 1, 4, 30)
    assert len(data) == 16 + 4 * (4 + 4 * 30)


def test_loads_without_sidecar(tmp_path, dset):
    path = tmp_path / "bare.spdd"
    path.write_bytes(encode_descriptors(dset.descriptors, dset.ids))
    loaded = load_descriptors(str(path))
    assert loaded.paths == ["", "", "", ""]
    assert loaded.dim == 30


def test_rejects_bad_input(dset):
    data = encode_descriptors(dset.descriptors, dset.ids)
    with pytest.raises(DescriptorFormatError):
        decode_descriptors(b"NOPE" + data[4:])
    with pytest.raises(DescriptorFormatError):
        decode_descriptors(data[:-1])
    with pytest.raises(DescriptorFormatError):
        decode_descriptors(data[:8])
    with pytest.raises(DescriptorFormatError):
        decode_descriptors(data[:4] + struct.pack("<I", 9) + data[8:])


def test_rejects_mixed_dimensions():
    with pytest.raises(ShapeError):
        encode_descriptors([Descriptor(np.zeros(3, np.float32)), Descriptor(np.zeros(4, np.float32))], [0, 1])
    with pytest.raises(ShapeError):
        encode_descriptors([Descriptor(np.zeros(3, np.float32))], [0, 1])


def test_missing_file(tmp_path):
    with pytest.raises(InputError):
        load_descriptors(str(tmp_path / "none.spdd"))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
