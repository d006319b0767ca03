"""
Activation heat maps for AMOS-VPR
"""

from typing import Tuple

import numpy as np

from core.dataset.images import resize_map
from core.errors import ShapeError

AGGREGATES = ("sum", "max")


def normalize_minmax(values: np.ndarray) -> np.ndarray:
    """Scale to [0, 1]; a constant array maps to zeros"""
    values = values.astype(np.float64)
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def heatmap(trace: dict, layer: str, size: Tuple[int, int], aggregate: str = "sum") -> np.ndarray:
    """(height, width) map in [0, 1] of one layer's channel-aggregated activations"""
    if layer not in trace:
        raise KeyError(f"layer {layer!r} was not captured (have {sorted(trace)})")
    act = trace[layer]
    if act.ndim != 3:
        raise ShapeError(f"heat maps need a spatial layer, {layer} has shape {act.shape}")
    if aggregate == "sum":
        plane = act.sum(axis=0, dtype=np.float64)
    elif aggregate == "max":
        plane = act.max(axis=0).astype(np.float64)
    else:
        raise ValueError(f"aggregate must be one of {AGGREGATES}, got {aggregate!r}")
    height, width = size
    upsampled = resize_map(normalize_minmax(plane), height, width)
    return np.clip(upsampled.astype(np.float64), 0.0, 1.0)


def overlay(image: np.ndarray, heat: np.ndarray, alpha: float = 0.5) -> np.ndarray:
    """Blend a red rendering of heat over a 0..255 (3, H, W) image"""
    if image.shape[1:] != heat.shape:
        raise ShapeError.mismatch("heat map", image.shape[1:], heat.shape)
    red = np.zeros_like(image, dtype=np.float64)
    red[0] = heat * 255.0
    return ((1.0 - alpha) * image.astype(np.float64) + alpha * red).astype(np.float32)
