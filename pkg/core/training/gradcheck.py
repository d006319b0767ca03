"""
Finite-difference gradient check for AMOS-VPR

Everything runs in float64. A parameter whose +/- eps evaluation flips a ReLU
or moves a pooling winner straddles a kink of the piecewise-linear network;
it is re-measured with the base activation pattern held fixed, which is the
derivative backprop computes.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from core.network.model import ActivationPattern, LayerParams, ModelWeights, backward, run
from core.network.spec import NetworkSpec
from core.tensor import kernels as K
from core.utils.logger import setup_logger

logger = setup_logger(__name__)

REL_FLOOR = 1e-8

GradHook = Callable[[Dict[str, LayerParams]], Dict[str, LayerParams]]


@dataclass
class GradCheckResult:
    max_rel_error: float
    per_layer: Dict[str, float] = field(default_factory=dict)
    checked: int = 0
    frozen: int = 0

    def __float__(self) -> float:
        return self.max_rel_error


def _loss(spec, weights, sample, target, pattern: Optional[ActivationPattern] = None) -> Tuple[float, ActivationPattern]:
    probs, _, cache = run(spec, weights, sample, pattern=pattern)
    return K.cross_entropy_loss(probs, target), cache.pattern()


def _with_value(weights: ModelWeights, layer: str, part: str, index: Tuple[int, ...], value: float) -> ModelWeights:
    p = weights[layer]
    arr = (p.weight if part == "weight" else p.bias).copy()
    arr[index] = value
    params = dict(weights.params)
    params[layer] = LayerParams(arr, p.bias) if part == "weight" else LayerParams(p.weight, arr)
    return ModelWeights(params, weights.mean)


def _pick(rng: np.random.Generator, shape: Tuple[int, ...], count: int) -> List[Tuple[int, ...]]:
    size = int(np.prod(shape))
    flat = rng.choice(size, size=min(count, size), replace=False)
    return [tuple(int(i) for i in np.unravel_index(f, shape)) for f in sorted(flat)]


def grad_check(
    spec: NetworkSpec,
    weights: ModelWeights,
    sample: np.ndarray,
    target: int,
    epsilon: float = 1e-3,
    params_per_layer: int = 200,
    seed: int = 0,
    backward_hook: Optional[GradHook] = None,
) -> GradCheckResult:
    """Max relative error |a - n| / max(|a|, |n|) between analytic and numeric gradients.

    Per layer, up to params_per_layer weights plus up to params_per_layer biases
    are sampled. backward_hook may rewrite the analytic gradients before comparison.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    w64 = weights.astype(np.float64)
    x64 = np.asarray(sample, dtype=np.float64)
    probs, _, cache = run(spec, w64, x64)
    base_pattern = cache.pattern()
    analytic = backward(spec, w64, cache, target)
    if backward_hook is not None:
        analytic = backward_hook(analytic)

    rng = np.random.default_rng(seed)
    result = GradCheckResult(0.0)
    for layer in w64.names():
        worst = 0.0
        for part in ("weight", "bias"):
            tensor = getattr(w64[layer], part)
            grad = getattr(analytic[layer], part)
            for index in _pick(rng, tensor.shape, params_per_layer):
                original = float(tensor[index])
                plus = _with_value(w64, layer, part, index, original + epsilon)
                minus = _with_value(w64, layer, part, index, original - epsilon)
                loss_plus, pattern_plus = _loss(spec, plus, x64, target)
                loss_minus, pattern_minus = _loss(spec, minus, x64, target)
                if not (pattern_plus.same_as(base_pattern) and pattern_minus.same_as(base_pattern)):
                    loss_plus, _ = _loss(spec, plus, x64, target, base_pattern)
                    loss_minus, _ = _loss(spec, minus, x64, target, base_pattern)
                    result.frozen += 1
                numeric = (loss_plus - loss_minus) / (2 * epsilon)
                a = float(grad[index])
                denom = max(abs(a), abs(numeric), REL_FLOOR)
                worst = max(worst, abs(a - numeric) / denom)
                result.checked += 1
        result.per_layer[layer] = worst
        result.max_rel_error = max(result.max_rel_error, worst)
    logger.info(
        f"Gradient check on {spec.name}: max relative error {result.max_rel_error:.3e} over "
        f"{result.checked} parameters ({result.frozen} at kinks)"
    )
    return result
