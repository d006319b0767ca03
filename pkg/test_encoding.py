#!/usr/bin/env python3
"""
Test multi-scale pyramid pooling, holistic pooling and layer encoding
"""

import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from core.config import EncoderConfig
from core.encoding.pooling import cell_bounds, encode, holistic_pool, l2_normalize, multiscale_pool, raw_flatten
from core.errors import ShapeError

SCALES = (1, 2, 3, 4)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(4, 20), st.integers(4, 20), st.integers(0, 10_000))
def test_dimension_law(channels, h, w, seed):
    maps = np.random.default_rng(seed).random((channels, h, w), dtype=np.float32)
    desc = multiscale_pool(maps, SCALES)
    assert desc.dim == channels * 30
    # scale 1 of every map is its global max
    raw = multiscale_pool(maps, SCALES, normalize=False).values.reshape(channels, 30)
    np.testing.assert_array_equal(raw[:, 0], holistic_pool(maps, "max", normalize=False).values)


def test_full_size_dimension():
    maps = np.random.default_rng(0).random((256, 6, 6), dtype=np.float32)
    assert multiscale_pool(maps).dim == 7680
    assert holistic_pool(maps, "max").dim == 256
    assert holistic_pool(maps, "sum").dim == 256


def test_constant_map():
    desc = multiscale_pool(np.full((1, 7, 5), 3.5, dtype=np.float32), SCALES, normalize=False)
    np.testing.assert_array_equal(desc.values, np.full(30, 3.5))


def test_single_spike():
    maps = np.zeros((1, 4, 4), dtype=np.float32)
    maps[0, 0, 0] = 2.0
    values = multiscale_pool(maps, SCALES, normalize=False).values
    assert values[0] == 2.0
    np.testing.assert_array_equal(values[1:5], [2.0, 0, 0, 0])
    np.testing.assert_array_equal(values[5:14], [2.0] + [0.0] * 8)
    np.testing.assert_array_equal(values[14:30], [2.0] + [0.0] * 15)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 12), st.integers(1, 12), st.integers(0, 10_000))
def test_scale_one_ignores_spatial_permutations(channels, h, w, seed):
    rng = np.random.default_rng(seed)
    maps = rng.normal(size=(channels, h, w)).astype(np.float32)
    shuffled = np.stack([rng.permutation(m.reshape(-1)).reshape(h, w) for m in maps])
    np.testing.assert_array_equal(multiscale_pool(shuffled, (1,)).values, multiscale_pool(maps, (1,)).values)


def cell_key(row, col, h, w):
    """Cell index of one position at every pyramid scale"""
    return tuple(
        (int(np.searchsorted(cell_bounds(h, s), row, side="right")) - 1,
         int(np.searchsorted(cell_bounds(w, s), col, side="right")) - 1)
        for s in SCALES
    )


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 10_000))
def test_moves_within_a_cell_leave_the_descriptor_unchanged(h, w, seed):
    rng = np.random.default_rng(seed)
    p = (int(rng.integers(h)), int(rng.integers(w)))
    key = cell_key(*p, h, w)
    partners = [(r, c) for r in range(h) for c in range(w) if cell_key(r, c, h, w) == key]
    q = partners[int(rng.integers(len(partners)))]

    maps = rng.random((2, h, w)).astype(np.float32)
    maps[:, p[0], p[1]] = 2.0
    moved = maps.copy()
    moved[:, p[0], p[1]], moved[:, q[0], q[1]] = maps[:, q[0], q[1]], maps[:, p[0], p[1]]
    np.testing.assert_array_equal(multiscale_pool(moved, SCALES).values, multiscale_pool(maps, SCALES).values)

    # a lone spike changes the descriptor exactly when it leaves some cell
    other = (int(rng.integers(h)), int(rng.integers(w)))
    spikes = np.zeros((2, 1, h, w), dtype=np.float32)
    spikes[0, 0, p[0], p[1]] = 1.0
    spikes[1, 0, other[0], other[1]] = 1.0
    a, b = (multiscale_pool(s, SCALES, normalize=False).values for s in spikes)
    assert np.array_equal(a, b) == (cell_key(*other, h, w) == key)


def test_cells_follow_floor_partition():
    np.testing.assert_array_equal(cell_bounds(7, 3), [0, 2, 4, 7])
    np.testing.assert_array_equal(cell_bounds(2, 4), [0, 0, 1, 1, 2])


def test_maps_smaller_than_scale_leave_empty_cells_zero():
    maps = np.array([[[5.0, 6.0]]], dtype=np.float32)
    values = multiscale_pool(maps, (1, 2), normalize=False).values
    # 1x2 map at scale 2: row cells [0, 0) and [0, 1), so the top row of cells is empty
    np.testing.assert_array_equal(values, [6.0, 0.0, 0.0, 5.0, 6.0])


def test_zero_maps_stay_zero_when_normalized():
    desc = multiscale_pool(np.zeros((3, 5, 5), dtype=np.float32))
    assert np.all(desc.values == 0)
    assert np.all(np.isfinite(desc.values))
    np.testing.assert_array_equal(l2_normalize(np.zeros(4)), np.zeros(4))


def test_normalized_descriptors_have_unit_norm():
    maps = np.random.default_rng(1).random((4, 9, 9), dtype=np.float32)
    for desc in (multiscale_pool(maps), holistic_pool(maps, "sum"), raw_flatten(maps)):
        assert np.linalg.norm(desc.values.astype(np.float64)) == pytest.approx(1.0, abs=1e-6)
        assert desc.values.dtype == np.float32


def test_scaling_maps_does_not_change_normalized_descriptor():
    maps = np.random.default_rng(2).random((3, 8, 8), dtype=np.float32)
    np.testing.assert_allclose(multiscale_pool(maps).values, multiscale_pool(maps * 4).values, atol=1e-6)


def test_channel_permutation_permutes_blocks():
    maps = np.random.default_rng(3).random((3, 6, 6), dtype=np.float32)
    order = [2, 0, 1]
    a = multiscale_pool(maps, normalize=False).values.reshape(3, 30)
    b = multiscale_pool(maps[order], normalize=False).values.reshape(3, 30)
    np.testing.assert_array_equal(a[order], b)


def test_raw_flatten_keeps_order():
    act = np.arange(12, dtype=np.float32).reshape(3, 2, 2)
    np.testing.assert_array_equal(raw_flatten(act, normalize=False).values, np.arange(12))


def test_descriptor_metadata():
    maps = np.ones((2, 4, 4), dtype=np.float32)
    desc = multiscale_pool(maps, (1, 2), layer="conv2")
    assert desc.source_layer == "conv2"
    assert desc.encoder == "multiscale[1,2]"
    assert holistic_pool(maps, "max").encoder == "holistic_max"


def test_encode_dispatch():
    trace = {"conv6": np.random.default_rng(4).random((256, 6, 6), dtype=np.float32),
             "fc7": np.random.default_rng(5).random(4096, dtype=np.float32)}
    assert encode(trace, "conv6", EncoderConfig("multiscale")).dim == 7680
    assert encode(trace, "conv6", EncoderConfig("holistic_max")).dim == 256
    assert encode(trace, "fc7", EncoderConfig("raw_flatten")).dim == 4096
    with pytest.raises(ShapeError):
        encode(trace, "fc7", EncoderConfig("multiscale"))
    with pytest.raises(KeyError):
        encode(trace, "conv5", EncoderConfig("multiscale"))


def test_spatial_encoders_reject_flat_input():
    with pytest.raises(ShapeError):
        multiscale_pool(np.zeros(10, dtype=np.float32))
    with pytest.raises(ValueError):
        holistic_pool(np.zeros((1, 2, 2)), "mean")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
