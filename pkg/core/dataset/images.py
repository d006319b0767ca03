"""
Image decoding, encoding and resampling for AMOS-VPR

Decoded images are float32 Tensor3 arrays (3, H, W) holding 0..255 RGB values.
"""

from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from core.errors import InputError, ShapeError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def is_image_file(path: Union[str, Path]) -> bool:
    return Path(path).suffix.lower() in IMAGE_SUFFIXES


def load_image(path: Union[str, Path]) -> np.ndarray:
    """Decode a PNG/JPEG file to a (3, H, W) float32 array; failures raise InputError"""
    try:
        with Image.open(path) as img:
            img.load()
            rgb = img.convert("RGB")
    except (OSError, UnidentifiedImageError, SyntaxError, ValueError) as e:
        raise InputError(f"cannot decode image {path}: {e}")
    return np.asarray(rgb, dtype=np.float32).transpose(2, 0, 1).copy()


def load_pil(path: Union[str, Path]) -> Image.Image:
    try:
        with Image.open(path) as img:
            img.load()
            return img.convert("RGB")
    except (OSError, UnidentifiedImageError, SyntaxError, ValueError) as e:
        raise InputError(f"cannot decode image {path}: {e}")


def to_pil(image: np.ndarray) -> Image.Image:
    """(3, H, W) 0..255 array (or (H, W) grayscale) to a PIL image"""
    pixels = np.clip(np.rint(image), 0, 255).astype(np.uint8)
    if pixels.ndim == 2:
        return Image.fromarray(pixels, mode="L")
    if pixels.ndim != 3 or pixels.shape[0] != 3:
        raise ShapeError(f"expected a (3, H, W) image, got {image.shape}")
    return Image.fromarray(pixels.transpose(1, 2, 0), mode="RGB")


def from_pil(img: Image.Image) -> np.ndarray:
    return np.asarray(img.convert("RGB"), dtype=np.float32).transpose(2, 0, 1).copy()


def save_image(path: Union[str, Path], image: Union[np.ndarray, Image.Image]):
    """Write a PNG (or JPEG by suffix); parent directories are created"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    img = image if isinstance(image, Image.Image) else to_pil(image)
    try:
        img.save(out)
    except OSError as e:
        raise InputError(f"cannot write image {out}: {e}")


def resize_map(plane: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of one float plane"""
    if plane.shape == (height, width):
        return plane.astype(np.float32, copy=True)
    img = Image.fromarray(np.ascontiguousarray(plane, dtype=np.float32), mode="F")
    return np.asarray(img.resize((width, height), Image.Resampling.BILINEAR), dtype=np.float32)


def resize_bilinear(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of every channel of a (C, H, W) array"""
    if image.shape[1:] == (height, width):
        return image.astype(np.float32, copy=True)
    return np.stack([resize_map(plane, height, width) for plane in image])


# per-mille weights keep gray pixels exact
LUMA_WEIGHTS = np.array([299.0, 587.0, 114.0])


def luminance(image: Image.Image) -> np.ndarray:
    """Unrounded 0.299 R + 0.587 G + 0.114 B luma per pixel, 0..255 float64"""
    rgb = np.asarray(image.convert("RGB"), dtype=np.float64)
    return (rgb @ LUMA_WEIGHTS) / 1000.0
