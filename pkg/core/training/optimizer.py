"""
Learning-rate schedule and momentum SGD for AMOS-VPR
"""

from typing import Dict, Tuple

import numpy as np

from core.config import TrainConfig
from core.errors import ShapeError
from core.network.model import LayerParams, ModelWeights


def lr_at(iteration: int, cfg: TrainConfig) -> float:
    """Step schedule: base_lr * lr_factor ** floor(iteration / lr_step_iters)"""
    if iteration < 0:
        raise ValueError(f"iteration must be >= 0, got {iteration}")
    return cfg.base_lr * cfg.lr_factor ** (iteration // cfg.lr_step_iters)


def _update(w: np.ndarray, g: np.ndarray, v: np.ndarray, lr: float, cfg: TrainConfig) -> Tuple[np.ndarray, np.ndarray]:
    if not w.shape == g.shape == v.shape:
        raise ShapeError(f"sgd shapes disagree: weights {w.shape}, grads {g.shape}, velocity {v.shape}")
    dtype = w.dtype
    v_new = (cfg.momentum * v - lr * (g + cfg.weight_decay * w)).astype(dtype)
    return (w + v_new).astype(dtype), v_new


def sgd_step(
    weights: ModelWeights,
    grads: Dict[str, LayerParams],
    velocity: ModelWeights,
    cfg: TrainConfig,
    iteration: int,
) -> Tuple[ModelWeights, ModelWeights]:
    """v' = momentum*v - lr*(g + weight_decay*w); w' = w + v'. Inputs are not modified."""
    if set(grads) != set(weights.names()) or set(velocity.names()) != set(weights.names()):
        raise ShapeError(
            f"sgd layer sets disagree: weights {sorted(weights.names())}, grads {sorted(grads)}, "
            f"velocity {sorted(velocity.names())}"
        )
    lr = lr_at(iteration, cfg)
    new_params, new_velocity = {}, {}
    for name in weights.names():
        p, g, v = weights[name], grads[name], velocity[name]
        w_new, vw = _update(p.weight, g.weight, v.weight, lr, cfg)
        b_new, vb = _update(p.bias, g.bias, v.bias, lr, cfg)
        new_params[name] = LayerParams(w_new, b_new)
        new_velocity[name] = LayerParams(vw, vb)
    return ModelWeights(new_params, weights.mean), ModelWeights(new_velocity)
