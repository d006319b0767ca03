#!/usr/bin/env python3
"""
Desk-scale acceptance runs for AMOS-VPR

The quick test drives the whole pipeline on a tiny toy set and checks that a
rerun is byte-identical. The slow tests train amosnet-mini on the synthetic
places and check directional results; run them with ``pytest --runslow``.
"""

import os
import sys
from pathlib import Path

import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from core.config import Config
from core.network.model import init_weights
from core.network.persistence import load_model, save_model
from core.pipeline import VPRPipeline

HERE = os.path.dirname(os.path.abspath(__file__))
TOY_CONF = os.path.join(HERE, "config", "toy.conf")
SEEDS = (0, 1, 2, 3, 4)

TINY = {
    "toy.num_places": 3,
    "toy.images_per_place": 6,
    "toy.image_size": 32,
    "augment.resize_to": 36,
    "augment.crop_to": 32,
    "split.train_per_camera": 4,
    "split.val_per_camera": 1,
    "train.max_iters": 6,
    "train.batch_size": 4,
    "train.log_interval": 3,
    "workers": 2,
}


def pipeline_for(seed: int, **overrides) -> VPRPipeline:
    values = {"seed": seed, "train.seed": seed, "toy.seed": seed}
    values.update(overrides)
    return VPRPipeline(Config(TOY_CONF, values))


def train_on_toy(pipeline: VPRPipeline, root: Path) -> dict:
    """gen-toy -> split -> train; returns the training summary"""
    pipeline.gen_toy(str(root / "toy"))
    pipeline.split(str(root / "toy"), str(root / "split"))
    return pipeline.train(str(root / "split" / "train.txt"), str(root / "train"), str(root / "split" / "val.txt"))


def traverse_auc(pipeline: VPRPipeline, model: str, root: Path, name: str) -> float:
    """extract both traverses -> match -> eval against the reference ground truth"""
    out = root / name
    pipeline.extract(model, str(root / "ref"), str(out / "ref"))
    pipeline.extract(model, str(root / "query"), str(out / "query"))
    pipeline.match(str(out / "query" / "descriptors.spdd"), str(out / "ref" / "descriptors.spdd"), str(out))
    summary = pipeline.eval(str(out / "confusion.txt"), str(root / "ref" / "ground_truth.txt"), str(out))
    return float(summary["auc"])


def untrained_copy(model: str, out: Path) -> str:
    """Random weights of the same network as a trained model file"""
    spec, trained = load_model(model)
    weights = init_weights(spec, seed=99, std=0.05)
    weights.mean = trained.mean
    save_model(weights, spec, str(out))
    return str(out)


def tiny_run(root: Path) -> dict:
    pipeline = pipeline_for(0, **TINY)
    train_on_toy(pipeline, root)
    pipeline.gen_toy(str(root / "ref"), traverse_seed=1)
    pipeline.gen_toy(str(root / "query"), traverse_seed=2)
    model = str(root / "train" / "model.spdn")
    auc = traverse_auc(pipeline, model, root, "eval")
    return {
        "auc": auc,
        "model": root / "train" / "model.spdn",
        "descriptors": root / "eval" / "ref" / "descriptors.spdd",
        "pr": root / "eval" / "pr.txt",
        "svg": root / "eval" / "pr_curve.svg",
    }


def test_pipeline_smoke_and_rerun_determinism(tmp_path):
    first = tiny_run(tmp_path / "a")
    second = tiny_run(tmp_path / "b")
    assert first["pr"].read_text().splitlines()[0] == "# recall precision"
    assert first["svg"].read_text().startswith("<svg")
    assert 0.0 <= first["auc"] <= 1.0
    for key in ("model", "descriptors", "pr"):
        assert first[key].read_bytes() == second[key].read_bytes(), key


@pytest.mark.slow
def test_toy_overfit(tmp_path):
    passed = 0
    for seed in SEEDS:
        root = tmp_path / f"seed{seed}"
        summary = train_on_toy(pipeline_for(seed), root)
        if float(summary["train_accuracy"]) >= 0.99 and float(summary["val_accuracy"]) >= 0.9:
            passed += 1
    assert passed >= 4


@pytest.mark.slow
def test_trained_features_beat_random_features(tmp_path):
    passed = 0
    for seed in SEEDS:
        root = tmp_path / f"seed{seed}"
        pipeline = pipeline_for(seed, **{"toy.num_places": 50})
        train_on_toy(pipeline, root)
        pipeline.gen_toy(str(root / "ref"), traverse_seed=1)
        pipeline.gen_toy(str(root / "query"), traverse_seed=2)
        model = str(root / "train" / "model.spdn")
        trained = traverse_auc(pipeline, model, root, "trained")
        untrained = traverse_auc(pipeline, untrained_copy(model, root / "untrained.spdn"), root, "untrained")
        if trained >= 0.8 and trained > untrained:
            passed += 1
    assert passed >= 4


@pytest.mark.slow
def test_multiscale_beats_holistic_under_viewpoint_shift(tmp_path):
    passed = 0
    for seed in SEEDS:
        root = tmp_path / f"seed{seed}"
        pipeline = pipeline_for(seed, **{"toy.shift_max": 6})
        train_on_toy(pipeline, root)
        pipeline.gen_toy(str(root / "ref"), traverse_seed=1)
        pipeline.gen_toy(str(root / "query"), traverse_seed=2)
        summary = pipeline.compare_encoders(
            str(root / "train" / "model.spdn"), str(root / "ref"), str(root / "query"),
            str(root / "ref" / "ground_truth.txt"), str(root / "compare"),
        )
        assert (root / "compare" / "encoder_auc.svg").exists()
        multiscale, holistic, flat = (
            float(summary[f"auc_{kind}"]) for kind in ("multiscale", "holistic_max", "raw_flatten")
        )
        if multiscale >= holistic >= flat:
            passed += 1
    assert passed >= 4


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
