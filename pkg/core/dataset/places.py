"""
Place datasets for AMOS-VPR: scanning, curation and train/val splitting

On disk a dataset is one directory per camera (place) holding its images.
Labels follow the lexicographic order of the camera directories.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.dataset.images import is_image_file, load_pil, luminance
from core.errors import InputError
from core.utils.logger import setup_logger

logger = setup_logger(__name__)

DEFAULT_BLACK_THRESHOLD = 10 / 255


@dataclass(frozen=True)
class ImageRecord:
    path: str
    timestamp: Optional[str] = None


@dataclass
class Camera:
    camera_id: str
    label: int
    images: List[ImageRecord]


@dataclass
class PlaceDataset:
    """Ordered cameras, each one place label with its images"""
    cameras: List[Camera]
    root: str = ""
    notes: List[str] = field(default_factory=list)

    @property
    def num_classes(self) -> int:
        return len(self.cameras)

    def __len__(self) -> int:
        return sum(len(c.images) for c in self.cameras)

    def samples(self) -> List[Tuple[str, int]]:
        """(path, label) pairs in camera order, then image order"""
        return [(rec.path, cam.label) for cam in self.cameras for rec in cam.images]

    def relabeled(self) -> "PlaceDataset":
        """Drop empty cameras and renumber labels 0..C-1 in camera order"""
        cameras = [c for c in self.cameras if c.images]
        return PlaceDataset(
            [Camera(c.camera_id, i, list(c.images)) for i, c in enumerate(cameras)],
            self.root,
            list(self.notes),
        )


@dataclass
class CurationReport:
    """Kept/removed counts overall and per camera"""
    scanned: int = 0
    kept: int = 0
    removed_black: int = 0
    removed_corrupt: int = 0
    per_camera: Dict[str, Dict[str, int]] = field(default_factory=dict)
    excluded_cameras: List[str] = field(default_factory=list)

    def check(self):
        assert self.kept + self.removed_black + self.removed_corrupt == self.scanned

    def to_text(self) -> str:
        lines = [
            f"scanned={self.scanned}",
            f"kept={self.kept}",
            f"removed_black={self.removed_black}",
            f"removed_corrupt={self.removed_corrupt}",
            "# camera kept removed_black removed_corrupt",
        ]
        for camera, counts in self.per_camera.items():
            lines.append(f"{camera} {counts['kept']} {counts['removed_black']} {counts['removed_corrupt']}")
        for camera in self.excluded_cameras:
            lines.append(f"# excluded {camera}")
        return "\n".join(lines) + "\n"


def scan_dataset(root: str) -> PlaceDataset:
    """One camera per sub-directory of root, labels in lexicographic order"""
    base = Path(root)
    if not base.is_dir():
        raise InputError(f"dataset root {root} does not exist or is not a directory")
    try:
        camera_dirs = sorted(p for p in base.iterdir() if p.is_dir())
    except OSError as e:
        raise InputError(f"cannot read dataset root {root}: {e}")
    if not camera_dirs:
        raise InputError(f"dataset root {root} has no camera directories")

    cameras = []
    notes = []
    for camera_dir in camera_dirs:
        try:
            files = sorted(p for p in camera_dir.iterdir() if p.is_file() and is_image_file(p))
        except OSError as e:
            raise InputError(f"cannot read camera directory {camera_dir}: {e}")
        if not files:
            logger.warning(f"Camera {camera_dir.name} has no image files, excluded")
            notes.append(f"excluded camera {camera_dir.name}: no image files")
            continue
        cameras.append(Camera(camera_dir.name, len(cameras), [ImageRecord(str(p)) for p in files]))
    if not cameras:
        raise InputError(f"dataset root {root} has no images")
    logger.info(f"Scanned {root}: {len(cameras)} cameras, {sum(len(c.images) for c in cameras)} images")
    return PlaceDataset(cameras, str(base), notes)


def classify_image(path: str, black_threshold: float = DEFAULT_BLACK_THRESHOLD) -> str:
    """'kept', 'black' or 'corrupt' for one image file"""
    try:
        img = load_pil(path)
    except InputError:
        return "corrupt"
    mean_luma = float(luminance(img).mean()) / 255.0
    if mean_luma < black_threshold:
        return "black"
    # frozen frame: every channel constant over all pixels
    pixels = np.asarray(img, dtype=np.float64).reshape(-1, 3)
    if np.all(pixels.var(axis=0) == 0.0):
        return "corrupt"
    return "kept"


def curate(
    dataset: PlaceDataset,
    black_threshold: float = DEFAULT_BLACK_THRESHOLD,
    report: Optional[CurationReport] = None,
    workers: int = 1,
) -> Tuple[PlaceDataset, CurationReport]:
    """Remove pitch-black, undecodable and zero-variance images"""
    report = report or CurationReport()
    records = [(cam, rec) for cam in dataset.cameras for rec in cam.images]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        verdicts = list(pool.map(lambda item: classify_image(item[1].path, black_threshold), records))

    kept: Dict[str, List[ImageRecord]] = {cam.camera_id: [] for cam in dataset.cameras}
    for (cam, rec), verdict in zip(records, verdicts):
        counts = report.per_camera.setdefault(cam.camera_id, {"kept": 0, "removed_black": 0, "removed_corrupt": 0})
        report.scanned += 1
        if verdict == "kept":
            kept[cam.camera_id].append(rec)
            counts["kept"] += 1
            report.kept += 1
        elif verdict == "black":
            counts["removed_black"] += 1
            report.removed_black += 1
        else:
            counts["removed_corrupt"] += 1
            report.removed_corrupt += 1
    report.check()

    cameras = []
    for cam in dataset.cameras:
        if not kept[cam.camera_id]:
            logger.warning(f"Camera {cam.camera_id} has no usable images after curation, excluded")
            report.excluded_cameras.append(cam.camera_id)
        cameras.append(Camera(cam.camera_id, cam.label, kept[cam.camera_id]))
    curated = PlaceDataset(cameras, dataset.root, list(dataset.notes)).relabeled()
    logger.info(
        f"Curation kept {report.kept}/{report.scanned} images "
        f"(black={report.removed_black}, corrupt={report.removed_corrupt})"
    )
    return curated, report


def split(
    dataset: PlaceDataset, train_per_camera: int, val_per_camera: int, seed: int
) -> Tuple[PlaceDataset, PlaceDataset]:
    """Seeded per-camera sampling without replacement into disjoint train/val sets.

    Cameras with fewer than train+val images are split proportionally and the
    shortfall is recorded in the returned datasets' notes.
    """
    rng = np.random.default_rng(seed)
    train_cams, val_cams, notes = [], [], []
    wanted = train_per_camera + val_per_camera
    for cam in dataset.cameras:
        n = len(cam.images)
        order = rng.permutation(n)
        if n >= wanted:
            n_train, n_val = train_per_camera, val_per_camera
        else:
            n_train = min(n, max(1, round(n * train_per_camera / wanted)))
            n_val = n - n_train
            note = f"camera {cam.camera_id}: only {n} images, split {n_train}/{n_val}"
            logger.warning(note)
            notes.append(note)
        train_idx = sorted(order[:n_train].tolist())
        val_idx = sorted(order[n_train:n_train + n_val].tolist())
        train_cams.append(Camera(cam.camera_id, cam.label, [cam.images[i] for i in train_idx]))
        val_cams.append(Camera(cam.camera_id, cam.label, [cam.images[i] for i in val_idx]))
    train = PlaceDataset(train_cams, dataset.root, list(dataset.notes) + notes)
    val = PlaceDataset(val_cams, dataset.root, list(dataset.notes) + notes)
    return train, val


def save_listing(dataset: PlaceDataset, path: str):
    """Plain-text listing: one 'label camera_id path' line per image"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# root={dataset.root}"]
    for cam in dataset.cameras:
        for rec in cam.images:
            lines.append(f"{cam.label}\t{cam.camera_id}\t{rec.path}")
    out.write_text("\n".join(lines) + "\n")


def load_listing(path: str) -> PlaceDataset:
    """Inverse of save_listing; cameras keep their stored labels"""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read dataset listing {path}: {e}")
    root = ""
    cameras: Dict[str, Camera] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.startswith("# root="):
            root = line[len("# root="):]
            continue
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3 or not parts[0].isdigit():
            raise InputError(f"{path}:{lineno}: expected 'label<TAB>camera<TAB>path'")
        label, camera_id, image_path = int(parts[0]), parts[1], parts[2]
        cam = cameras.setdefault(camera_id, Camera(camera_id, label, []))
        cam.images.append(ImageRecord(image_path))
    if not cameras:
        raise InputError(f"dataset listing {path} is empty")
    return PlaceDataset(sorted(cameras.values(), key=lambda c: c.label), root)


def open_dataset(path: str) -> PlaceDataset:
    """A dataset directory or a listing file"""
    return scan_dataset(path) if Path(path).is_dir() else load_listing(path)

