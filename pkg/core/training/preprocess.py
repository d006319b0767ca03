"""
Image preprocessing for AMOS-VPR: resize, crop, scale and mean-center
"""

from typing import Optional, Tuple

import numpy as np

from core.config import AugmentConfig
from core.dataset.images import resize_bilinear
from core.errors import ShapeError


def crop_offset(size: int, crop: int, mode: str, rng: Optional[np.random.Generator]) -> Tuple[int, int]:
    """Top-left corner of the crop: uniform in train mode, centered in eval mode"""
    if mode == "train" and rng is not None:
        return int(rng.integers(0, size - crop + 1)), int(rng.integers(0, size - crop + 1))
    centre = (size - crop) // 2
    return centre, centre


def preprocess(
    image: np.ndarray,
    cfg: AugmentConfig,
    mode: str = "eval",
    rng: Optional[np.random.Generator] = None,
    mean: Optional[np.ndarray] = None,
) -> np.ndarray:
    """0..255 (3, H, W) image to a centered (3, crop, crop) network input"""
    if image.ndim != 3 or image.shape[0] != 3:
        raise ShapeError(f"preprocess needs a 3-channel (3, H, W) image, got {image.shape}")
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    resized = resize_bilinear(image, cfg.resize_to, cfg.resize_to)
    crop_mode = mode if cfg.train_crop == "random" else "eval"
    top, left = crop_offset(cfg.resize_to, cfg.crop_to, crop_mode, rng)
    out = resized[:, top:top + cfg.crop_to, left:left + cfg.crop_to] / np.float32(255.0)
    if mode == "train" and cfg.flip and rng is not None and rng.random() < 0.5:
        out = out[:, :, ::-1]
    if mean is not None:
        out = out - mean.astype(np.float32)[:, None, None]
    return np.ascontiguousarray(out, dtype=np.float32)


def channel_mean(images, cfg: AugmentConfig) -> np.ndarray:
    """Per-channel mean of eval-mode crops in [0, 1] units"""
    total = np.zeros(3, dtype=np.float64)
    count = 0
    for image in images:
        total += preprocess(image, cfg, "eval").mean(axis=(1, 2), dtype=np.float64)
        count += 1
    if count == 0:
        raise ValueError("cannot compute a mean over zero images")
    return (total / count).astype(np.float32)
