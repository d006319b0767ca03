"""
First-layer weight mosaics for AMOS-VPR
"""

import numpy as np

from core.errors import ShapeError
from core.network.model import ModelWeights
from core.network.spec import LayerKind, NetworkSpec
from core.viz.patches import tile_grid


def kernel_tile(kernel: np.ndarray) -> np.ndarray:
    """(3, k, k) kernel min-max scaled to 0..255; a constant kernel is mid-gray"""
    lo, hi = float(kernel.min()), float(kernel.max())
    if hi == lo:
        return np.full(kernel.shape, 0.5 * 255.0, dtype=np.float32)
    return ((kernel.astype(np.float64) - lo) / (hi - lo) * 255.0).astype(np.float32)


def weight_mosaic(weights: ModelWeights, spec: NetworkSpec, layer: str = "conv1") -> np.ndarray:
    """RGB tiles of every kernel of an RGB-input conv layer on a near-square grid"""
    first = spec.layers[0]
    if first.kind is not LayerKind.CONV or first.name != layer:
        raise ShapeError(f"weight mosaics render the first conv layer, {layer} is not it")
    kernels = weights[layer].weight
    if kernels.shape[1] != 3:
        raise ShapeError(f"{layer} has {kernels.shape[1]} input channels, RGB tiles need 3")
    return tile_grid([kernel_tile(k) for k in kernels])
