"""
Synthetic place dataset generator for AMOS-VPR

Every place gets a fixed base scene (a colour gradient with random rectangles
and ellipses) drawn from its own sub-seed. Images of a place are the base
scene under sampled conditions: brightness, hue shift, sensor noise and an
optional pixel shift standing in for small viewpoint changes. The manifest
records every condition parameter, so each file can be re-rendered exactly.
"""

from dataclasses import dataclass, asdict, fields
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from PIL import Image, ImageDraw, ImageEnhance

from core.config import ToyConfig
from core.dataset.images import save_image
from core.dataset.places import Camera, ImageRecord, PlaceDataset
from core.errors import InputError
from core.utils.logger import setup_logger

logger = setup_logger(__name__)

MANIFEST_NAME = "manifest.txt"
SHIFT_FILL = (127, 127, 127)


@dataclass(frozen=True)
class Condition:
    """Perturbation applied to a base scene to produce one image"""
    place: int
    brightness: float = 1.0
    hue_shift: float = 0.0
    noise_std: float = 0.0
    noise_seed: int = 0
    dx: int = 0
    dy: int = 0

    def to_line(self, relpath: str) -> str:
        values = " ".join(f"{k}={v!r}" for k, v in asdict(self).items())
        return f"{relpath} {values}"

    @classmethod
    def from_line(cls, line: str) -> "tuple[str, Condition]":
        parts = line.split()
        if not parts:
            raise InputError("empty manifest line")
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for token in parts[1:]:
            key, _, value = token.partition("=")
            if key not in types:
                raise InputError(f"unknown manifest field {key!r}")
            kwargs[key] = int(value) if key in ("place", "noise_seed", "dx", "dy") else float(value)
        return parts[0], cls(**kwargs)


def render_base_scene(seed: int, place: int, size: int) -> Image.Image:
    """Deterministic base scene for one place"""
    rng = np.random.default_rng([seed, place])
    top, bottom = rng.integers(0, 256, size=(2, 3))
    ramp = np.linspace(0.0, 1.0, size)[:, None, None]
    gradient = (1 - ramp) * top[None, None, :] + ramp * bottom[None, None, :]
    pixels = np.broadcast_to(gradient, (size, size, 3)).round().astype(np.uint8)
    img = Image.fromarray(np.ascontiguousarray(pixels), mode="RGB")
    draw = ImageDraw.Draw(img)
    for _ in range(int(rng.integers(4, 9))):
        x0, y0 = (int(v) for v in rng.integers(0, max(1, size - 4), size=2))
        w, h = (int(v) for v in rng.integers(max(1, size // 8), max(2, size // 2), size=2))
        colour = tuple(int(v) for v in rng.integers(0, 256, size=3))
        if rng.random() < 0.5:
            draw.rectangle([x0, y0, min(size - 1, x0 + w), min(size - 1, y0 + h)], fill=colour)
        else:
            draw.ellipse([x0, y0, min(size - 1, x0 + w), min(size - 1, y0 + h)], fill=colour)
    return img


def apply_condition(base: Image.Image, cond: Condition) -> Image.Image:
    """Render one image of a place under the given condition"""
    img = base
    if cond.brightness != 1.0:
        img = ImageEnhance.Brightness(img).enhance(cond.brightness)
    if cond.hue_shift != 0.0:
        hsv = np.asarray(img.convert("HSV"), dtype=np.int16)
        shift = int(round(cond.hue_shift * 256))
        hsv[..., 0] = (hsv[..., 0] + shift) % 256
        img = Image.fromarray(hsv.astype(np.uint8), mode="HSV").convert("RGB")
    if cond.noise_std > 0.0:
        rng = np.random.default_rng(cond.noise_seed)
        pixels = np.asarray(img, dtype=np.float64)
        pixels = pixels + rng.normal(0.0, cond.noise_std * 255.0, size=pixels.shape)
        img = Image.fromarray(np.clip(np.rint(pixels), 0, 255).astype(np.uint8), mode="RGB")
    if cond.dx or cond.dy:
        img = img.transform(img.size, Image.Transform.AFFINE, (1, 0, cond.dx, 0, 1, cond.dy),
                            resample=Image.Resampling.NEAREST, fillcolor=SHIFT_FILL)
    return img


def sample_condition(cfg: ToyConfig, rng: np.random.Generator, place: int) -> Condition:
    brightness = 1.0 + float(rng.uniform(-cfg.brightness_range, cfg.brightness_range)) if cfg.brightness_range else 1.0
    hue = float(rng.uniform(-cfg.hue_shift_range, cfg.hue_shift_range)) if cfg.hue_shift_range else 0.0
    noise_seed = int(rng.integers(0, 2**31 - 1))
    if cfg.shift_max:
        dx, dy = (int(v) for v in rng.integers(-cfg.shift_max, cfg.shift_max + 1, size=2))
    else:
        dx = dy = 0
    return Condition(place, brightness, hue, cfg.noise_std, noise_seed, dx, dy)


def _writable_dir(out: str) -> Path:
    base = Path(out)
    try:
        base.mkdir(parents=True, exist_ok=True)
        marker = base / ".write_check"
        marker.write_bytes(b"")
        marker.unlink()
    except OSError as e:
        raise InputError(f"output directory {out} is not writable: {e}")
    return base


def gen_toy(cfg: ToyConfig, out: str) -> PlaceDataset:
    """Write one camera directory per place plus the manifest"""
    base = _writable_dir(out)
    cameras = []
    manifest = []
    for place in range(cfg.num_places):
        scene = render_base_scene(cfg.seed, place, cfg.image_size)
        rng = np.random.default_rng([cfg.seed, place, 1])
        camera_id = f"place_{place:04d}"
        records = []
        for i in range(cfg.images_per_place):
            cond = sample_condition(cfg, rng, place)
            relpath = f"{camera_id}/img_{i:04d}.png"
            save_image(base / relpath, apply_condition(scene, cond))
            manifest.append(cond.to_line(relpath))
            records.append(ImageRecord(str(base / relpath)))
        cameras.append(Camera(camera_id, place, records))
    _write_manifest(base, cfg, manifest)
    logger.info(f"Generated toy dataset: {cfg.num_places} places x {cfg.images_per_place} images in {out}")
    return PlaceDataset(cameras, str(base))


def gen_traverse(cfg: ToyConfig, out: str, condition_seed: int) -> List[str]:
    """One image per place, in place order, under a traverse-specific condition draw.

    Places share their base scenes with gen_toy for the same cfg.seed. Writes
    an identity ground-truth table next to the images.
    """
    base = _writable_dir(out)
    paths, manifest = [], []
    for place in range(cfg.num_places):
        scene = render_base_scene(cfg.seed, place, cfg.image_size)
        rng = np.random.default_rng([cfg.seed, place, 2, condition_seed])
        cond = sample_condition(cfg, rng, place)
        relpath = f"{place:04d}.png"
        save_image(base / relpath, apply_condition(scene, cond))
        manifest.append(cond.to_line(relpath))
        paths.append(str(base / relpath))
    _write_manifest(base, cfg, manifest)
    gt_lines = ["tolerance=0"] + [f"{i} {i}" for i in range(cfg.num_places)]
    (base / "ground_truth.txt").write_text("\n".join(gt_lines) + "\n")
    logger.info(f"Generated toy traverse of {cfg.num_places} places in {out} (condition seed {condition_seed})")
    return paths


def _write_manifest(base: Path, cfg: ToyConfig, lines: List[str]):
    header = [f"# {k}={v!r}" for k, v in asdict(cfg).items()]
    (base / MANIFEST_NAME).write_text("\n".join(header + lines) + "\n")


def read_manifest(root: str) -> Dict[str, object]:
    """Toy config and per-file conditions stored in a generated tree"""
    path = Path(root) / MANIFEST_NAME
    try:
        text = path.read_text()
    except OSError as e:
        raise InputError(f"cannot read toy manifest {path}: {e}")
    settings, conditions = {}, {}
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            settings[key] = value
        elif line.strip():
            relpath, cond = Condition.from_line(line)
            conditions[relpath] = cond
    cfg = ToyConfig(**{
        f.name: (float(settings[f.name]) if f.type in (float, "float") else int(settings[f.name]))
        for f in fields(ToyConfig) if f.name in settings
    })
    return {"config": cfg, "conditions": conditions}


def rerender(root: str, relpath: str, out_path: Optional[str] = None) -> Image.Image:
    """Rebuild one generated image from the manifest alone"""
    info = read_manifest(root)
    cfg: ToyConfig = info["config"]
    cond: Condition = info["conditions"][relpath]
    img = apply_condition(render_base_scene(cfg.seed, cond.place, cfg.image_size), cond)
    if out_path:
        save_image(out_path, img)
    return img
