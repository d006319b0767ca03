"""
Model weights, forward execution and backpropagation for AMOS-VPR
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple, Callable

import numpy as np

from core.errors import ShapeError
from core.network.spec import NetworkSpec, LayerKind, param_shapes
from core.tensor import kernels as K
from core.utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class LayerParams:
    """Weight tensor and bias vector of one parametric layer"""
    weight: np.ndarray
    bias: np.ndarray


@dataclass
class ModelWeights:
    """Parameters of every parametric layer keyed by layer name.

    ``mean`` is the per-channel dataset mean (in [0, 1] pixel units) used for
    centering inputs; it travels with the model file.
    """
    params: Dict[str, LayerParams]
    mean: Optional[np.ndarray] = None

    def __getitem__(self, name: str) -> LayerParams:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def names(self) -> List[str]:
        return list(self.params)

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "ModelWeights":
        """Apply fn to every weight and bias, returning new weights"""
        return ModelWeights(
            {name: LayerParams(fn(p.weight), fn(p.bias)) for name, p in self.params.items()},
            None if self.mean is None else self.mean.copy(),
        )

    def astype(self, dtype) -> "ModelWeights":
        return self.map(lambda a: a.astype(dtype))

    def zeros_like(self) -> "ModelWeights":
        return self.map(np.zeros_like)

    def num_parameters(self) -> int:
        return sum(p.weight.size + p.bias.size for p in self.params.values())

    def check(self, spec: NetworkSpec):
        """Every parametric layer has parameters of the inferred shape, nothing else"""
        expected = {name: (w, b) for name, w, b in param_shapes(spec)}
        if set(expected) != set(self.params):
            raise ShapeError(
                f"weights cover layers {sorted(self.params)} but the network has parametric layers {sorted(expected)}"
            )
        for name, (w_shape, b_shape) in expected.items():
            p = self.params[name]
            if p.weight.shape != w_shape:
                raise ShapeError.mismatch(f"{name} weights", w_shape, p.weight.shape)
            if p.bias.shape != b_shape:
                raise ShapeError.mismatch(f"{name} biases", b_shape, p.bias.shape)


def init_weights(spec: NetworkSpec, seed: int, std: float = 0.01) -> ModelWeights:
    """Gaussian N(0, std^2) weights and zero biases from a seeded generator"""
    rng = np.random.default_rng(seed)
    params = {}
    for name, w_shape, b_shape in param_shapes(spec):
        weight = rng.normal(0.0, std, size=w_shape).astype(np.float32)
        params[name] = LayerParams(weight, np.zeros(b_shape, dtype=np.float32))
    logger.debug(f"Initialized {spec.name} weights with seed {seed}")
    return ModelWeights(params)


@dataclass
class ForwardCache:
    """Everything backward needs from one forward pass"""
    inputs: List[np.ndarray] = field(default_factory=list)
    pool_maps: Dict[str, K.PoolIndexMap] = field(default_factory=dict)
    relu_masks: Dict[str, np.ndarray] = field(default_factory=dict)
    probs: Optional[np.ndarray] = None
    logits: Optional[np.ndarray] = None

    def pattern(self) -> "ActivationPattern":
        return ActivationPattern(dict(self.relu_masks), dict(self.pool_maps))


@dataclass
class ActivationPattern:
    """ReLU masks and pooling winners of one forward pass.

    Running forward with a fixed pattern evaluates the piecewise-linear network
    on the linear piece the pattern selects.
    """
    relu_masks: Dict[str, np.ndarray]
    pool_maps: Dict[str, K.PoolIndexMap]

    def same_as(self, other: "ActivationPattern") -> bool:
        if self.relu_masks.keys() != other.relu_masks.keys():
            return False
        for name, mask in self.relu_masks.items():
            if not np.array_equal(mask, other.relu_masks[name]):
                return False
        for name, pool in self.pool_maps.items():
            if not np.array_equal(pool.indices, other.pool_maps[name].indices):
                return False
        return True


ActivationTrace = Dict[str, np.ndarray]


def _captured_name(spec: NetworkSpec, i: int) -> List[str]:
    """Names recorded with the output of layer i.

    A conv/FC layer directly followed by a ReLU is reported post-activation,
    so its capture is filled in by the ReLU.
    """
    layer = spec.layers[i]
    names = [layer.name]
    if layer.kind is LayerKind.RELU and i > 0 and spec.layers[i - 1].parametric:
        names.append(spec.layers[i - 1].name)
    return names


def run(
    spec: NetworkSpec,
    weights: ModelWeights,
    image: np.ndarray,
    capture: Iterable[str] = (),
    pattern: Optional[ActivationPattern] = None,
) -> Tuple[np.ndarray, ActivationTrace, ForwardCache]:
    """Forward pass returning probabilities, captured activations and the cache"""
    if image.shape != spec.input_shape:
        raise ShapeError.mismatch("network input", spec.input_shape, image.shape)
    wanted = set(capture)
    unknown = wanted - set(spec.names)
    if unknown:
        raise KeyError(f"cannot capture unknown layers {sorted(unknown)}")

    trace: ActivationTrace = {}
    cache = ForwardCache()
    x = image
    for i, layer in enumerate(spec.layers):
        cache.inputs.append(x)
        if layer.kind is LayerKind.CONV:
            p = weights[layer.name]
            x = K.conv2d_forward(x, K.ConvKernelBank(p.weight, p.bias), layer.stride, layer.pad)
        elif layer.kind is LayerKind.RELU:
            if pattern is not None:
                mask = pattern.relu_masks[layer.name]
                x = x * mask
            else:
                mask = x > 0
                x = K.relu(x)
            cache.relu_masks[layer.name] = mask
        elif layer.kind is LayerKind.MAXPOOL:
            if pattern is not None:
                pool_map = pattern.pool_maps[layer.name]
                x = K.maxpool_gather(x, pool_map)
            else:
                x, pool_map = K.maxpool_forward(x, layer.window, layer.stride)
            cache.pool_maps[layer.name] = pool_map
        elif layer.kind is LayerKind.FC:
            p = weights[layer.name]
            x = K.fc_forward(x.ravel(), p.weight, p.bias)
        elif layer.kind is LayerKind.SOFTMAX:
            cache.logits = x
            x = K.softmax(x)
        for name in _captured_name(spec, i):
            if name in wanted:
                trace[name] = x
    if cache.logits is None:
        cache.logits = x
        x = K.softmax(x)
    cache.probs = x
    return x, trace, cache


def forward(
    spec: NetworkSpec, weights: ModelWeights, image: np.ndarray, capture: Iterable[str] = ()
) -> Tuple[np.ndarray, ActivationTrace]:
    """Class probabilities and the requested post-activation layer outputs"""
    probs, trace, _ = run(spec, weights, image, capture)
    return probs, trace


def backward(
    spec: NetworkSpec, weights: ModelWeights, cache: ForwardCache, target: int
) -> Dict[str, LayerParams]:
    """Parameter gradients of cross_entropy_loss(probs, target)"""
    grad = K.softmax_ce_backward(cache.probs, target)
    grads: Dict[str, LayerParams] = {}
    for i in range(len(spec.layers) - 1, -1, -1):
        layer = spec.layers[i]
        x = cache.inputs[i]
        if layer.kind is LayerKind.SOFTMAX:
            continue
        if layer.kind is LayerKind.FC:
            p = weights[layer.name]
            gx, gw, gb = K.fc_backward(x.ravel(), p.weight, grad)
            grads[layer.name] = LayerParams(gw, gb)
            grad = gx.reshape(x.shape)
        elif layer.kind is LayerKind.RELU:
            grad = K.relu_backward(x, grad)
        elif layer.kind is LayerKind.MAXPOOL:
            grad = K.maxpool_backward(grad, cache.pool_maps[layer.name])
        elif layer.kind is LayerKind.CONV:
            p = weights[layer.name]
            gx, gw, gb = K.conv2d_backward(x, K.ConvKernelBank(p.weight, p.bias), layer.stride, layer.pad, grad)
            grads[layer.name] = LayerParams(gw, gb)
            grad = gx
    return grads


def loss_and_grads(
    spec: NetworkSpec, weights: ModelWeights, image: np.ndarray, target: int
) -> Tuple[float, np.ndarray, Dict[str, LayerParams]]:
    """Cross-entropy loss, class probabilities and parameter gradients for one sample"""
    probs, _, cache = run(spec, weights, image)
    loss = K.cross_entropy_loss(probs, target)
    return loss, probs, backward(spec, weights, cache, target)


def predict(spec: NetworkSpec, weights: ModelWeights, image: np.ndarray) -> int:
    probs, _ = forward(spec, weights, image)
    return int(np.argmax(probs))
