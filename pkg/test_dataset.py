#!/usr/bin/env python3
"""
Test dataset scanning, curation, splitting, listings and ground-truth tables
"""

import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from core.dataset.ground_truth import load_ground_truth, parse_ground_truth, save_ground_truth
from core.dataset.places import (
    Camera,
    ImageRecord,
    PlaceDataset,
    classify_image,
    curate,
    load_listing,
    save_listing,
    scan_dataset,
    split,
)
from core.errors import InputError
from core.placerec.evaluation import GroundTruth


def write_png(path, pixels):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="RGB").save(path)


def normal_pixels(seed):
    return np.random.default_rng(seed).integers(20, 236, size=(8, 8, 3))


def test_scan_labels_cameras_lexicographically(tmp_path):
    for name in ("b", "a"):
        write_png(tmp_path / name / "0.png", normal_pixels(0))
    (tmp_path / "a" / "notes.txt").write_text("not an image")
    dataset = scan_dataset(str(tmp_path))
    assert [(c.camera_id, c.label) for c in dataset.cameras] == [("a", 0), ("b", 1)]
    assert len(dataset) == 2
    assert scan_dataset(str(tmp_path)) == dataset


def test_scan_excludes_empty_camera(tmp_path):
    write_png(tmp_path / "a" / "0.png", normal_pixels(0))
    (tmp_path / "empty").mkdir()
    dataset = scan_dataset(str(tmp_path))
    assert [c.camera_id for c in dataset.cameras] == ["a"]
    assert any("empty" in note for note in dataset.notes)


def test_scan_rejects_bad_roots(tmp_path):
    with pytest.raises(InputError):
        scan_dataset(str(tmp_path / "missing"))
    with pytest.raises(InputError):
        scan_dataset(str(tmp_path))


def test_classify_examples(tmp_path):
    write_png(tmp_path / "black.png", np.zeros((8, 8, 3)))
    (tmp_path / "truncated.png").write_bytes((tmp_path / "black.png").read_bytes()[:20])
    write_png(tmp_path / "flat.png", np.full((8, 8, 3), 128))
    write_png(tmp_path / "ok.png", normal_pixels(1))
    assert classify_image(str(tmp_path / "black.png")) == "black"
    assert classify_image(str(tmp_path / "truncated.png")) == "corrupt"
    assert classify_image(str(tmp_path / "flat.png")) == "corrupt"
    assert classify_image(str(tmp_path / "ok.png")) == "kept"


def test_mean_luminance_at_threshold_is_kept(tmp_path):
    pixels = np.full((8, 8, 3), 9)
    pixels[4:] = 11
    write_png(tmp_path / "edge.png", pixels)
    assert classify_image(str(tmp_path / "edge.png"), black_threshold=10 / 255) == "kept"
    assert classify_image(str(tmp_path / "edge.png"), black_threshold=10.5 / 255) == "black"


def test_luminance_uses_unrounded_weighted_channels(tmp_path):
    write_png(tmp_path / "green.png", np.full((8, 8, 3), (0, 17, 0)))
    write_png(tmp_path / "dim.png", np.full((8, 8, 3), (0, 18, 0)))
    # 0.587 * 17 = 9.979 sits under 10 even though its rounded luma does not
    assert classify_image(str(tmp_path / "green.png"), black_threshold=10 / 255) == "black"
    assert classify_image(str(tmp_path / "dim.png"), black_threshold=10 / 255) == "corrupt"


def test_solid_colour_frame_is_frozen(tmp_path):
    write_png(tmp_path / "solid.png", np.full((8, 8, 3), (200, 100, 50)))
    pixels = np.full((8, 8, 3), (200, 100, 50))
    pixels[0, 0, 2] = 51
    write_png(tmp_path / "almost.png", pixels)
    assert classify_image(str(tmp_path / "solid.png")) == "corrupt"
    assert classify_image(str(tmp_path / "almost.png")) == "kept"


def test_curation_counts_and_idempotence(tmp_path):
    for cam in range(5):
        for i in range(20):
            write_png(tmp_path / f"cam{cam}" / f"n{i:02d}.png", normal_pixels(cam * 100 + i))
        for i in range(4):
            write_png(tmp_path / f"cam{cam}" / f"b{i}.png", np.zeros((8, 8, 3)))
        (tmp_path / f"cam{cam}" / "x.png").write_bytes(b"\x89PNG broken")
    curated, report = curate(scan_dataset(str(tmp_path)), workers=3)
    assert (report.removed_black, report.removed_corrupt, report.kept) == (20, 5, 100)
    assert report.scanned == 125
    assert report.per_camera["cam0"] == {"kept": 20, "removed_black": 4, "removed_corrupt": 1}
    again, second = curate(curated)
    assert again == curated
    assert (second.removed_black, second.removed_corrupt, second.kept) == (0, 0, 100)
    assert report.to_text().startswith("scanned=125\nkept=100\n")


def test_curation_drops_cameras_left_empty(tmp_path):
    write_png(tmp_path / "a" / "0.png", normal_pixels(0))
    write_png(tmp_path / "b" / "0.png", np.zeros((8, 8, 3)))
    write_png(tmp_path / "c" / "0.png", normal_pixels(1))
    curated, report = curate(scan_dataset(str(tmp_path)))
    assert [(c.camera_id, c.label) for c in curated.cameras] == [("a", 0), ("c", 1)]
    assert report.excluded_cameras == ["b"]


def synthetic(counts):
    return PlaceDataset([
        Camera(f"cam{i}", i, [ImageRecord(f"/x/cam{i}/{j:03d}.png") for j in range(n)])
        for i, n in enumerate(counts)
    ])


def test_split_default_toy_sizes():
    train, val = split(synthetic([50, 50]), 40, 5, seed=0)
    assert [len(c.images) for c in train.cameras] == [40, 40]
    assert [len(c.images) for c in val.cameras] == [5, 5]


def test_split_exact_size_consumes_everything():
    train, val = split(synthetic([9]), 6, 3, seed=4)
    assert sorted(train.cameras[0].images + val.cameras[0].images, key=lambda r: r.path) == synthetic([9]).cameras[0].images


def test_split_small_camera_is_proportional():
    train, val = split(synthetic([5]), 40, 5, seed=0)
    assert len(train.cameras[0].images) == 4
    assert len(val.cameras[0].images) == 1
    assert train.notes


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 30), min_size=1, max_size=5), st.integers(1, 10), st.integers(0, 5), st.integers(0, 99))
def test_split_properties(counts, n_train, n_val, seed):
    dataset = synthetic(counts)
    train, val = split(dataset, n_train, n_val, seed)
    again, _ = split(dataset, n_train, n_val, seed)
    assert train == again
    for cam, t, v in zip(dataset.cameras, train.cameras, val.cameras):
        t_paths = {r.path for r in t.images}
        v_paths = {r.path for r in v.images}
        assert not t_paths & v_paths
        assert t_paths | v_paths <= {r.path for r in cam.images}
        assert t.label == v.label == cam.label
        if len(cam.images) >= n_train + n_val:
            assert (len(t_paths), len(v_paths)) == (n_train, n_val)
        else:
            assert len(t_paths) + len(v_paths) == len(cam.images)
            assert len(t_paths) >= 1


def test_listing_round_trip(tmp_path):
    dataset = synthetic([2, 3])
    save_listing(dataset, str(tmp_path / "list.txt"))
    loaded = load_listing(str(tmp_path / "list.txt"))
    assert loaded.samples() == dataset.samples()


def test_listing_errors(tmp_path):
    (tmp_path / "bad.txt").write_text("zero\tcam\t/p.png\n")
    with pytest.raises(InputError):
        load_listing(str(tmp_path / "bad.txt"))
    (tmp_path / "empty.txt").write_text("# root=/x\n")
    with pytest.raises(InputError):
        load_listing(str(tmp_path / "empty.txt"))


def test_ground_truth_parsing():
    gt = parse_ground_truth("0 0\n1 1")
    assert gt.matches == [0, 1]
    assert gt.tolerance_frames == 0
    assert parse_ground_truth("tolerance=2\n0 3\n").tolerance_frames == 2
    assert parse_ground_truth("queries=3\n1 4\n").matches == [None, 4, None]


def test_ground_truth_errors():
    with pytest.raises(InputError, match=":2:"):
        parse_ground_truth("0 0\n0 1\n")
    with pytest.raises(InputError, match=":1:"):
        parse_ground_truth("zero one\n")
    with pytest.raises(InputError):
        parse_ground_truth("speed=3\n")
    with pytest.raises(InputError):
        parse_ground_truth("queries=1\n3 3\n")


def test_ground_truth_file_round_trip(tmp_path):
    gt = GroundTruth([2, None, 0], tolerance_frames=1)
    save_ground_truth(gt, str(tmp_path / "gt.txt"))
    assert load_ground_truth(str(tmp_path / "gt.txt")) == gt
    with pytest.raises(InputError):
        load_ground_truth(str(tmp_path / "none.txt"))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
