#!/usr/bin/env python3
"""
Test AMOS-VPR network specs, shape inference and forward execution
"""

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from conftest import small_spec
from core.errors import ConfigError, ShapeError
from core.network.model import LayerParams, ModelWeights, forward, init_weights, predict, run
from core.network.spec import (
    LayerKind,
    LayerSpec,
    NetworkSpec,
    amosnet_mini_spec,
    amosnet_spec,
    feature_layers,
    infer_shapes,
    layer_output_shape,
    param_shapes,
    spec_by_name,
)


@pytest.fixture(scope="module")
def amosnet():
    spec = amosnet_spec(5)
    return spec, init_weights(spec, seed=0)


def test_amosnet_layout():
    spec = amosnet_spec(5)
    assert len(spec.conv_layers()) == 6
    assert spec.input_shape == (3, 227, 227)
    shapes = dict(zip(spec.names, infer_shapes(spec)))
    assert shapes["conv1"] == (96, 55, 55)
    assert shapes["pool1"] == (96, 27, 27)
    assert shapes["conv5"] == (256, 13, 13)
    assert shapes["conv6"] == (256, 6, 6)
    assert shapes["fc7"] == (4096,)
    assert shapes["prob"] == (5,)
    assert feature_layers(spec) == ["conv1", "conv2", "conv3", "conv4", "conv5", "conv6", "fc7", "fc8"]


def test_amosnet_mini_layout():
    spec = amosnet_mini_spec(10)
    shapes = dict(zip(spec.names, infer_shapes(spec)))
    assert shapes["conv1"] == (16, 30, 30)
    assert shapes["pool1"] == (16, 15, 15)
    assert shapes["conv2"] == (32, 15, 15)
    assert shapes["pool2"] == (32, 7, 7)
    params = {name: (w, b) for name, w, b in param_shapes(spec)}
    assert params["fc7"] == ((128, 1568), (128,))
    assert params["fc8"] == ((10, 128), (10,))


def test_shape_rules():
    assert layer_output_shape(LayerSpec.maxpool("pool", 3, 2), (4, 13, 13)) == (4, 6, 6)
    for k in (1, 3, 5, 7):
        same = LayerSpec.conv("conv", 2, k, 1, (k - 1) // 2)
        assert layer_output_shape(same, (3, 17, 11)) == (2, 17, 11)


def test_non_positive_shape_names_layer():
    spec = NetworkSpec((LayerSpec.conv("big", 2, 5), LayerSpec.fc("fc", 2)), 2, (3, 3, 3))
    with pytest.raises(ShapeError) as e:
        infer_shapes(spec)
    assert "big" in str(e.value)


def test_spec_validation():
    with pytest.raises(ConfigError):
        NetworkSpec((LayerSpec.relu("a"), LayerSpec.relu("a")), 2)
    with pytest.raises(ConfigError):
        NetworkSpec((LayerSpec.softmax("prob"), LayerSpec.fc("fc", 2)), 2)
    with pytest.raises(ConfigError):
        spec_by_name("resnet", 3)
    with pytest.raises(ConfigError):
        spec_by_name("amosnet", 3, 64)
    assert spec_by_name("amosnet-mini", 3, 48).input_shape == (3, 48, 48)


def test_init_weights_is_seeded():
    spec = amosnet_mini_spec(4)
    a, b, c = init_weights(spec, 7), init_weights(spec, 7), init_weights(spec, 8)
    for name in a.names():
        np.testing.assert_array_equal(a[name].weight, b[name].weight)
        assert np.all(a[name].bias == 0)
    assert not np.array_equal(a["conv1"].weight, c["conv1"].weight)


def test_weights_check_rejects_wrong_shape():
    spec = small_spec()
    weights = init_weights(spec, 0)
    params = dict(weights.params)
    params["fc4"] = LayerParams(np.zeros((2, 5), np.float32), np.zeros(2, np.float32))
    with pytest.raises(ShapeError):
        ModelWeights(params).check(spec)


def test_zero_weights_give_uniform_output():
    spec = small_spec(num_classes=4)
    weights = init_weights(spec, 0).map(np.zeros_like)
    probs, _ = forward(spec, weights, np.random.default_rng(0).random((3, 9, 9)).astype(np.float32))
    np.testing.assert_allclose(probs, [0.25] * 4)


def test_forward_rejects_wrong_input_shape():
    spec = small_spec()
    with pytest.raises(ShapeError):
        forward(spec, init_weights(spec, 0), np.zeros((3, 8, 8), np.float32))


def test_capture_single_layer(amosnet):
    spec, weights = amosnet
    image = np.random.default_rng(1).random((3, 227, 227), dtype=np.float32)
    probs, trace = forward(spec, weights, image, {"conv1"})
    assert list(trace) == ["conv1"]
    assert trace["conv1"].shape == (96, 55, 55)
    assert np.all(trace["conv1"] >= 0)
    assert probs.shape == (5,)


def test_inferred_shapes_match_execution(amosnet):
    spec, weights = amosnet
    image = np.random.default_rng(2).random((3, 227, 227), dtype=np.float32)
    _, trace = forward(spec, weights, image, spec.names)
    for name, shape in zip(spec.names, infer_shapes(spec)):
        assert trace[name].shape == shape, name


def test_forward_is_deterministic(tiny_spec, tiny_weights):
    image = np.random.default_rng(3).random((3, 9, 9), dtype=np.float32)
    a, trace_a = forward(tiny_spec, tiny_weights, image, {"conv2", "fc3"})
    b, trace_b = forward(tiny_spec, tiny_weights, image, {"conv2", "fc3"})
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(trace_a["conv2"], trace_b["conv2"])
    assert a.sum() == pytest.approx(1.0)
    assert predict(tiny_spec, tiny_weights, image) == int(np.argmax(a))


def test_capture_unknown_layer(tiny_spec, tiny_weights):
    with pytest.raises(KeyError):
        forward(tiny_spec, tiny_weights, np.zeros((3, 9, 9)), {"conv9"})


def test_frozen_pattern_reproduces_forward(tiny_spec, tiny_weights):
    image = np.random.default_rng(4).normal(size=(3, 9, 9))
    weights = tiny_weights.astype(np.float64)
    probs, _, cache = run(tiny_spec, weights, image)
    frozen, _, _ = run(tiny_spec, weights, image, pattern=cache.pattern())
    np.testing.assert_allclose(frozen, probs, rtol=0, atol=1e-15)


def test_layer_kinds_double_as_tags():
    assert [k.value for k in LayerKind] == [1, 2, 3, 4, 5]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
