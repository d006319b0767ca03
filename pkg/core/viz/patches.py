"""
Maximally activating image patches for AMOS-VPR
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.config import AugmentConfig
from core.dataset.images import resize_bilinear, save_image
from core.errors import ShapeError
from core.network.model import ModelWeights, forward
from core.network.spec import NetworkSpec, infer_shapes
from core.training.preprocess import crop_offset, preprocess
from core.utils.logger import setup_logger
from core.viz.receptive import receptive_field

logger = setup_logger(__name__)

PAD_VALUE = 127.0


@dataclass(frozen=True)
class PatchHit:
    image_id: int
    filter: int
    activation: float
    unit: Tuple[int, int]
    box: Tuple[int, int, int, int]


def input_aug(spec: NetworkSpec, aug_cfg: Optional[AugmentConfig]) -> AugmentConfig:
    """The given preprocessing, or a no-op one for images already at the input size"""
    if aug_cfg is not None:
        return aug_cfg
    size = spec.input_shape[1]
    return AugmentConfig(resize_to=size, crop_to=size)


def display_crop(image: np.ndarray, aug_cfg: AugmentConfig) -> np.ndarray:
    """The 0..255 pixels the network sees, before scaling and centering"""
    resized = resize_bilinear(image, aug_cfg.resize_to, aug_cfg.resize_to)
    top, left = crop_offset(aug_cfg.resize_to, aug_cfg.crop_to, "eval", None)
    return resized[:, top:top + aug_cfg.crop_to, left:left + aug_cfg.crop_to]


def top_k_patches(
    spec: NetworkSpec,
    weights: ModelWeights,
    images: Sequence[np.ndarray],
    layer: str,
    filter: int,
    k: int = 9,
    aug_cfg: Optional[AugmentConfig] = None,
    workers: int = 1,
) -> List[PatchHit]:
    """The k strongest units of one filter, at most one per image, strongest first.

    Within an image the first maximal unit in row-major order wins; across
    images ties go to the lower image index.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    shape = infer_shapes(spec)[spec.index(layer)]
    if len(shape) != 3:
        raise ShapeError(f"layer {layer} has no spatial extent (output shape {shape})")
    if not 0 <= filter < shape[0]:
        raise ShapeError(f"filter {filter} out of range, {layer} has {shape[0]} channels")
    rf = receptive_field(spec, layer)
    aug = input_aug(spec, aug_cfg)
    _, height, width = spec.input_shape

    def _best(item: Tuple[int, np.ndarray]) -> PatchHit:
        image_id, image = item
        _, trace = forward(spec, weights, preprocess(image, aug, "eval", mean=weights.mean), {layer})
        plane = trace[layer][filter]
        flat = int(np.argmax(plane))
        row, col = divmod(flat, plane.shape[1])
        return PatchHit(image_id, filter, float(plane[row, col]), (row, col), rf.box(row, col, height, width))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        hits = list(pool.map(_best, enumerate(images)))
    hits.sort(key=lambda h: (-h.activation, h.image_id))
    return hits[:k]


def crop_patch(image: np.ndarray, hit: PatchHit, size: int, origin: Tuple[int, int]) -> np.ndarray:
    """size x size tile of the hit's box, mid-gray where the field leaves the image"""
    tile = np.full((3, size, size), PAD_VALUE, dtype=np.float32)
    top, left, bottom, right = hit.box
    dy, dx = top - origin[0], left - origin[1]
    tile[:, dy:dy + bottom - top, dx:dx + right - left] = image[:, top:bottom, left:right]
    return tile


def tile_grid(tiles: Sequence[np.ndarray], background: float = 255.0) -> np.ndarray:
    """Near-square grid of equal (3, k, k) tiles with 1-pixel separators"""
    n = len(tiles)
    size = tiles[0].shape[1]
    cols = int(np.ceil(np.sqrt(n)))
    rows = int(np.ceil(n / cols))
    grid = np.full((3, rows * (size + 1) - 1, cols * (size + 1) - 1), background, dtype=np.float32)
    for i, tile in enumerate(tiles):
        r, c = divmod(i, cols)
        grid[:, r * (size + 1):r * (size + 1) + size, c * (size + 1):c * (size + 1) + size] = tile
    return grid


def write_patches(
    spec: NetworkSpec,
    layer: str,
    hits: Sequence[PatchHit],
    images: Sequence[np.ndarray],
    paths: Sequence[str],
    out_dir: str,
    aug_cfg: Optional[AugmentConfig] = None,
    prefix: str = "patches",
) -> Path:
    """Write one PNG per patch, the mosaic and its sidecar index"""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rf = receptive_field(spec, layer)
    aug = input_aug(spec, aug_cfg)
    tiles = []
    index = ["# rank image activation top left bottom right"]
    for rank, hit in enumerate(hits):
        crop = display_crop(images[hit.image_id], aug)
        tile = crop_patch(crop, hit, rf.size, rf.origin(*hit.unit))
        save_image(out / f"{prefix}_{rank:02d}.png", tile)
        tiles.append(tile)
        top, left, bottom, right = hit.box
        index.append(f"{rank} {paths[hit.image_id]} {hit.activation:.9g} {top} {left} {bottom} {right}")
    mosaic = out / f"{prefix}.png"
    if tiles:
        save_image(mosaic, tile_grid(tiles))
    (out / f"{prefix}.txt").write_text("\n".join(index) + "\n")
    logger.info(f"Wrote {len(tiles)} {layer} patches to {out}")
    return mosaic
