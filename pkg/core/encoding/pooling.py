"""
Descriptor encoders for AMOS-VPR

Spatial encoders turn one layer's (C, H, W) activations into a flat vector:
multi-scale pyramid max pooling, global (holistic) max or sum pooling, or the
raw activations flattened. FC activations only support the raw form.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from core.config import EncoderConfig
from core.errors import ShapeError
from core.utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class Descriptor:
    """Flat feature vector plus where it came from"""
    values: np.ndarray
    source_layer: str = ""
    encoder: str = ""

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def _check_maps(maps: np.ndarray):
    if not isinstance(maps, np.ndarray) or maps.ndim != 3:
        raise ShapeError(f"spatial encoders need (channels, height, width) activations, got {getattr(maps, 'shape', None)}")
    if maps.size == 0:
        raise ShapeError(f"cannot encode empty activations of shape {maps.shape}")


def l2_normalize(values: np.ndarray) -> np.ndarray:
    """Unit Euclidean norm; the zero vector stays zero"""
    norm = float(np.sqrt(np.sum(values.astype(np.float64) ** 2)))
    if norm == 0.0:
        return values.astype(np.float32)
    return (values.astype(np.float64) / norm).astype(np.float32)


def _finalize(values: np.ndarray, normalize: bool, layer: str, summary: str) -> Descriptor:
    values = l2_normalize(values) if normalize else values.astype(np.float32)
    return Descriptor(values, layer, summary)


def cell_bounds(size: int, scale: int) -> np.ndarray:
    """Floor partition of [0, size) into scale cells: cell i is [b[i], b[i+1])"""
    return (np.arange(scale + 1) * size) // scale


def pyramid_values(maps: np.ndarray, scales: Sequence[int]) -> np.ndarray:
    """(C, sum S^2) max over every cell of every scale; empty cells give 0"""
    c, h, w = maps.shape
    per_map = []
    for s in scales:
        rows, cols = cell_bounds(h, s), cell_bounds(w, s)
        grid = np.zeros((c, s, s), dtype=maps.dtype)
        for i in range(s):
            if rows[i] == rows[i + 1]:
                continue
            for j in range(s):
                if cols[j] == cols[j + 1]:
                    continue
                grid[:, i, j] = maps[:, rows[i]:rows[i + 1], cols[j]:cols[j + 1]].max(axis=(1, 2))
        per_map.append(grid.reshape(c, s * s))
    return np.concatenate(per_map, axis=1)


def multiscale_pool(
    maps: np.ndarray, scales: Sequence[int] = (1, 2, 3, 4), normalize: bool = True, layer: str = ""
) -> Descriptor:
    """Pyramid max pooling, scales in order within each map, maps in channel order"""
    _check_maps(maps)
    values = pyramid_values(maps, scales).reshape(-1)
    return _finalize(values, normalize, layer, EncoderConfig("multiscale", tuple(scales), normalize).summary())


def holistic_pool(maps: np.ndarray, mode: str = "max", normalize: bool = True, layer: str = "") -> Descriptor:
    """One global max or sum per map"""
    _check_maps(maps)
    if mode == "max":
        values = maps.max(axis=(1, 2))
    elif mode == "sum":
        values = maps.sum(axis=(1, 2), dtype=np.float64)
    else:
        raise ValueError(f"holistic pooling mode must be 'max' or 'sum', got {mode!r}")
    return _finalize(values, normalize, layer, f"holistic_{mode}")


def raw_flatten(activations: np.ndarray, normalize: bool = True, layer: str = "") -> Descriptor:
    return _finalize(np.asarray(activations).reshape(-1), normalize, layer, "raw_flatten")


def encode(trace: dict, layer: str, cfg: EncoderConfig) -> Descriptor:
    """Encode one captured layer with the configured encoder"""
    if layer not in trace:
        raise KeyError(f"layer {layer!r} was not captured (have {sorted(trace)})")
    act = trace[layer]
    if cfg.kind == "raw_flatten":
        return raw_flatten(act, cfg.normalize, layer)
    if act.ndim != 3:
        raise ShapeError(f"encoder {cfg.kind} needs a spatial layer, {layer} is flat with shape {act.shape}")
    if cfg.kind == "multiscale":
        return multiscale_pool(act, cfg.scales, cfg.normalize, layer)
    return holistic_pool(act, cfg.kind.split("_", 1)[1], cfg.normalize, layer)
