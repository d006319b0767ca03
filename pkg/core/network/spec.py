"""
Network architecture descriptions for AMOS-VPR
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

from core.errors import ShapeError, ConfigError
from core.tensor.kernels import conv_output_size, pool_output_size


class LayerKind(Enum):
    """Layer variants; values double as the SPDN kind tag"""
    CONV = 1
    RELU = 2
    MAXPOOL = 3
    FC = 4
    SOFTMAX = 5


PARAMETRIC = (LayerKind.CONV, LayerKind.FC)


@dataclass(frozen=True)
class LayerSpec:
    """One named layer; only the fields of its kind are meaningful"""
    name: str
    kind: LayerKind
    out_channels: int = 0
    kernel_size: int = 0
    stride: int = 1
    pad: int = 0
    window: int = 0
    out_features: int = 0

    @classmethod
    def conv(cls, name: str, out_channels: int, kernel_size: int, stride: int = 1, pad: int = 0) -> "LayerSpec":
        return cls(name, LayerKind.CONV, out_channels=out_channels, kernel_size=kernel_size, stride=stride, pad=pad)

    @classmethod
    def relu(cls, name: str) -> "LayerSpec":
        return cls(name, LayerKind.RELU)

    @classmethod
    def maxpool(cls, name: str, window: int, stride: int) -> "LayerSpec":
        return cls(name, LayerKind.MAXPOOL, window=window, stride=stride)

    @classmethod
    def fc(cls, name: str, out_features: int) -> "LayerSpec":
        return cls(name, LayerKind.FC, out_features=out_features)

    @classmethod
    def softmax(cls, name: str) -> "LayerSpec":
        return cls(name, LayerKind.SOFTMAX)

    @property
    def parametric(self) -> bool:
        return self.kind in PARAMETRIC


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layers, input shape and class count"""
    layers: Tuple[LayerSpec, ...]
    num_classes: int
    input_shape: Tuple[int, int, int] = (3, 227, 227)
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_shape", tuple(self.input_shape))
        names = [layer.name for layer in self.layers]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ConfigError(f"duplicate layer names: {', '.join(duplicates)}")
        for layer in self.layers[:-1]:
            if layer.kind is LayerKind.SOFTMAX:
                raise ConfigError(f"softmax layer {layer.name!r} must be the final layer")
        if len(self.input_shape) != 3:
            raise ShapeError(f"input shape must be (channels, height, width), got {self.input_shape}")

    @property
    def names(self) -> List[str]:
        return [layer.name for layer in self.layers]

    def index(self, name: str) -> int:
        for i, layer in enumerate(self.layers):
            if layer.name == name:
                return i
        raise KeyError(f"no layer named {name!r}")

    def layer(self, name: str) -> LayerSpec:
        return self.layers[self.index(name)]

    def conv_layers(self) -> List[LayerSpec]:
        return [layer for layer in self.layers if layer.kind is LayerKind.CONV]


def layer_output_shape(layer: LayerSpec, shape: Tuple[int, ...]) -> Tuple[int, ...]:
    """Output shape of one layer given its input shape"""
    if layer.kind is LayerKind.CONV:
        if len(shape) != 3:
            raise ShapeError(f"layer {layer.name!r}: conv needs a spatial input, got {shape}")
        h = conv_output_size(shape[1], layer.kernel_size, layer.stride, layer.pad)
        w = conv_output_size(shape[2], layer.kernel_size, layer.stride, layer.pad)
        out = (layer.out_channels, h, w)
    elif layer.kind is LayerKind.MAXPOOL:
        if len(shape) != 3:
            raise ShapeError(f"layer {layer.name!r}: pooling needs a spatial input, got {shape}")
        if layer.window > min(shape[1], shape[2]):
            raise ShapeError(f"layer {layer.name!r}: pool window {layer.window} larger than input {shape}")
        h = pool_output_size(shape[1], layer.window, layer.stride)
        w = pool_output_size(shape[2], layer.window, layer.stride)
        out = (shape[0], h, w)
    elif layer.kind is LayerKind.FC:
        out = (layer.out_features,)
    else:
        out = tuple(shape)
    if any(d < 1 for d in out):
        raise ShapeError(f"layer {layer.name!r} produces non-positive shape {out} from input {tuple(shape)}")
    return out


def infer_shapes(spec: NetworkSpec) -> List[Tuple[int, ...]]:
    """Per-layer output shapes, in layer order"""
    shapes = []
    shape: Tuple[int, ...] = spec.input_shape
    for layer in spec.layers:
        shape = layer_output_shape(layer, shape)
        shapes.append(shape)
    if not shapes or shapes[-1] != (spec.num_classes,):
        raise ShapeError(
            f"network output {shapes[-1] if shapes else None} does not match {spec.num_classes} classes"
        )
    return shapes


def input_shapes(spec: NetworkSpec) -> List[Tuple[int, ...]]:
    """Per-layer input shapes, in layer order"""
    return [spec.input_shape] + infer_shapes(spec)[:-1]


def param_shapes(spec: NetworkSpec) -> List[Tuple[str, Tuple[int, ...], Tuple[int, ...]]]:
    """(name, weight shape, bias shape) for every parametric layer"""
    out = []
    for layer, shape_in in zip(spec.layers, input_shapes(spec)):
        if layer.kind is LayerKind.CONV:
            out.append((layer.name, (layer.out_channels, shape_in[0], layer.kernel_size, layer.kernel_size),
                        (layer.out_channels,)))
        elif layer.kind is LayerKind.FC:
            fan_in = 1
            for d in shape_in:
                fan_in *= d
            out.append((layer.name, (layer.out_features, fan_in), (layer.out_features,)))
    return out


def _conv_block(layers: List[LayerSpec], name: str, out: int, k: int, stride: int, pad: int):
    layers.append(LayerSpec.conv(name, out, k, stride, pad))
    layers.append(LayerSpec.relu(f"relu{name[4:]}"))


def amosnet_spec(num_classes: int) -> NetworkSpec:
    """Six conv layers (CaffeNet-like conv1-5 plus conv6), fc7, fc8 and softmax on 3x227x227"""
    if num_classes < 2:
        raise ConfigError(f"num_classes must be >= 2, got {num_classes}")
    layers: List[LayerSpec] = []
    _conv_block(layers, "conv1", 96, 11, 4, 0)
    layers.append(LayerSpec.maxpool("pool1", 3, 2))
    _conv_block(layers, "conv2", 256, 5, 1, 2)
    layers.append(LayerSpec.maxpool("pool2", 3, 2))
    _conv_block(layers, "conv3", 384, 3, 1, 1)
    _conv_block(layers, "conv4", 384, 3, 1, 1)
    _conv_block(layers, "conv5", 256, 3, 1, 1)
    layers.append(LayerSpec.maxpool("pool5", 3, 2))
    _conv_block(layers, "conv6", 256, 3, 1, 1)
    layers.append(LayerSpec.maxpool("pool6", 3, 2))
    layers.append(LayerSpec.fc("fc7", 4096))
    layers.append(LayerSpec.relu("relu7"))
    layers.append(LayerSpec.fc("fc8", num_classes))
    layers.append(LayerSpec.softmax("prob"))
    return NetworkSpec(tuple(layers), num_classes, (3, 227, 227), "amosnet")


def amosnet_mini_spec(num_classes: int, input_size: int = 64) -> NetworkSpec:
    """Desk-scale variant with non-overlapping (stride == window) pooling"""
    if num_classes < 1:
        raise ConfigError(f"num_classes must be >= 1, got {num_classes}")
    layers: List[LayerSpec] = []
    _conv_block(layers, "conv1", 16, 5, 2, 0)
    layers.append(LayerSpec.maxpool("pool1", 2, 2))
    _conv_block(layers, "conv2", 32, 3, 1, 1)
    layers.append(LayerSpec.maxpool("pool2", 2, 2))
    layers.append(LayerSpec.fc("fc7", 128))
    layers.append(LayerSpec.relu("relu7"))
    layers.append(LayerSpec.fc("fc8", num_classes))
    layers.append(LayerSpec.softmax("prob"))
    return NetworkSpec(tuple(layers), num_classes, (3, input_size, input_size), "amosnet-mini")


def spec_by_name(name: str, num_classes: int, input_size: Optional[int] = None) -> NetworkSpec:
    """Named topology; input_size is the crop the network is fed"""
    if name == "amosnet":
        if input_size not in (None, 227):
            raise ConfigError(f"amosnet takes 227x227 inputs, got crop size {input_size}")
        return amosnet_spec(num_classes)
    if name == "amosnet-mini":
        return amosnet_mini_spec(num_classes, input_size or 64)
    raise ConfigError(f"unknown network {name!r}")


def feature_layers(spec: NetworkSpec) -> List[str]:
    """Conv and FC layers, the candidates for descriptor extraction"""
    return [layer.name for layer in spec.layers if layer.parametric]
