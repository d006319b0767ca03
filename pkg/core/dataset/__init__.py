"""
Datasets, curation and synthetic places for AMOS-VPR
"""

from core.dataset.images import load_image, save_image, is_image_file
from core.dataset.places import (
    ImageRecord,
    Camera,
    PlaceDataset,
    CurationReport,
    scan_dataset,
    classify_image,
    curate,
    split,
    save_listing,
    load_listing,
    open_dataset,
)
from core.dataset.ground_truth import load_ground_truth, parse_ground_truth, save_ground_truth
from core.dataset.toy import Condition, gen_toy, gen_traverse, read_manifest, rerender
