"""
End-to-end pipelines for AMOS-VPR

Each method backs one CLI command: it validates its inputs, writes its
outputs under the given directory and returns the summary fields the CLI
prints as one key=value line.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from core.config import ENCODER_KINDS, Config, EncoderConfig
from core.dataset.ground_truth import load_ground_truth
from core.dataset.images import is_image_file, load_image, save_image
from core.dataset.places import curate, load_listing, open_dataset, save_listing, scan_dataset, split
from core.dataset.toy import gen_toy, gen_traverse
from core.encoding.pooling import Descriptor, encode
from core.encoding.store import DescriptorSet, load_descriptors, save_descriptors
from core.errors import ConfigError, InputError
from core.network.model import ModelWeights, forward
from core.network.persistence import load_model, save_model
from core.network.spec import LayerKind, NetworkSpec, feature_layers, spec_by_name
from core.placerec.evaluation import GroundTruth, evaluate_pr, save_best_matches, save_pr
from core.placerec.matching import build_confusion, load_confusion, save_confusion
from core.training.preprocess import preprocess
from core.training.trainer import evaluate_accuracy, load_images, train
from core.utils.logger import setup_logger
from core.viz.heatmap import heatmap, overlay
from core.viz.mosaic import weight_mosaic
from core.viz.patches import display_crop, top_k_patches, write_patches
from core.viz.svg import bar_plot, line_plot

logger = setup_logger(__name__)

Summary = Dict[str, object]


def traverse_paths(path: str) -> List[str]:
    """Ordered image paths of a traverse.

    A directory contributes its image files sorted by name (or, if it only has
    camera sub-directories, every dataset image in label order); a file is a
    dataset listing or one image path per line.
    """
    source = Path(path)
    if source.is_dir():
        files = sorted(str(p) for p in source.iterdir() if p.is_file() and is_image_file(p))
        if files:
            return files
        return [p for p, _ in scan_dataset(path).samples()]
    try:
        lines = [line for line in source.read_text().splitlines() if line.strip() and not line.startswith("#")]
    except OSError as e:
        raise InputError(f"cannot read traverse {path}: {e}")
    if lines and "\t" in lines[0]:
        return [p for p, _ in load_listing(path).samples()]
    if not lines:
        raise InputError(f"traverse {path} lists no images")
    return [line.strip() for line in lines]


class VPRPipeline:
    """Main AMOS-VPR system class"""

    def __init__(self, config: Config):
        self.config = config
        self.run = config.run

    def _out(self, out: str) -> Path:
        base = Path(out)
        base.mkdir(parents=True, exist_ok=True)
        return base

    def _load_model(self, model_path: str) -> Tuple[NetworkSpec, ModelWeights]:
        spec, weights = load_model(model_path)
        crop = self.run.augment.crop_to
        if spec.input_shape[1] != crop:
            logger.warning(
                f"augment.crop_to={crop} but {model_path} expects {spec.input_shape[1]}px inputs; using the model's size"
            )
        return spec, weights

    def _aug_for(self, spec: NetworkSpec):
        aug = self.run.augment
        size = spec.input_shape[1]
        if aug.crop_to == size:
            return aug
        return replace(aug, crop_to=size, resize_to=max(size, round(size * aug.resize_to / aug.crop_to)))

    def _check_layers(self, spec: NetworkSpec, layers: Sequence[str]):
        unknown = [name for name in layers if name not in spec.names]
        if unknown:
            raise ConfigError(f"network {spec.name} has no layers {unknown}; available: {', '.join(spec.names)}")

    def _traces(self, spec: NetworkSpec, weights: ModelWeights, paths: Sequence[str], layers: Sequence[str]) -> List[dict]:
        """Captured activations of every image, in path order"""
        aug = self._aug_for(spec)

        def _one(path: str) -> dict:
            _, trace = forward(spec, weights, preprocess(load_image(path), aug, "eval", mean=weights.mean), layers)
            return trace

        with ThreadPoolExecutor(max_workers=self.run.workers) as pool:
            return list(pool.map(_one, paths))

    def _encoder_for(self, spec: NetworkSpec, layer: str) -> EncoderConfig:
        """The configured encoder, or raw_flatten for flat (post-FC) layers"""
        enc = self.run.encoder
        kind = enc.kind
        if self._after_fc(spec, layer):
            kind = "raw_flatten"
        return EncoderConfig(kind, enc.scales, enc.normalize)

    @staticmethod
    def _after_fc(spec: NetworkSpec, layer: str) -> bool:
        return any(item.kind is LayerKind.FC for item in spec.layers[:spec.index(layer) + 1])

    # -- commands --------------------------------------------------------

    def gen_toy(self, out: str, traverse_seed: Optional[int] = None) -> Summary:
        cfg = self.run.toy
        if traverse_seed is not None:
            paths = gen_traverse(cfg, out, traverse_seed)
            return {"places": cfg.num_places, "images": len(paths), "out": out}
        dataset = gen_toy(cfg, out)
        return {"places": dataset.num_classes, "images": len(dataset), "out": out}

    def curate(self, dataset_path: str, out: str) -> Summary:
        base = self._out(out)
        curated, report = curate(scan_dataset(dataset_path), self.run.split.black_threshold, workers=self.run.workers)
        (base / "curation_report.txt").write_text(report.to_text())
        save_listing(curated, str(base / "curated.txt"))
        return {
            "scanned": report.scanned,
            "kept": report.kept,
            "removed_black": report.removed_black,
            "removed_corrupt": report.removed_corrupt,
            "cameras": curated.num_classes,
        }

    def split(self, dataset_path: str, out: str) -> Summary:
        base = self._out(out)
        cfg = self.run.split
        train_set, val_set = split(open_dataset(dataset_path), cfg.train_per_camera, cfg.val_per_camera, self.run.seed)
        save_listing(train_set, str(base / "train.txt"))
        save_listing(val_set, str(base / "val.txt"))
        if train_set.notes:
            (base / "split_notes.txt").write_text("\n".join(train_set.notes) + "\n")
        return {"train": len(train_set), "val": len(val_set), "cameras": train_set.num_classes}

    def train(self, data_path: str, out: str, val_path: Optional[str] = None) -> Summary:
        base = self._out(out)
        dataset = open_dataset(data_path)
        val = open_dataset(val_path) if val_path else None
        spec = spec_by_name(self.run.network, dataset.num_classes, self.run.augment.crop_to)
        weights, log = train(dataset, spec, self.run.train, self.run.augment, val, self.run.workers)
        save_model(weights, spec, str(base / "model.spdn"))
        log.save(str(base / "train_log.txt"))
        if log.losses:
            peak = max(log.losses) or 1.0
            points = [(i / max(len(log.losses) - 1, 1), loss / peak) for i, loss in enumerate(log.losses)]
            line_plot({"loss / max": points}, str(base / "train_loss.svg"), f"{spec.name} training loss",
                      "iteration (fraction of run)", "loss")
        images = load_images([p for p, _ in dataset.samples()], self.run.augment.resize_to, self.run.workers)
        train_acc = evaluate_accuracy(spec, weights, images, [y for _, y in dataset.samples()],
                                      self.run.augment, self.run.workers)
        summary: Summary = {
            "iterations": len(log.losses),
            "final_loss": f"{log.losses[-1]:.6f}" if log.losses else "nan",
            "train_accuracy": f"{train_acc:.6f}",
        }
        if log.rows and log.rows[-1].val_accuracy is not None:
            summary["val_accuracy"] = f"{log.rows[-1].val_accuracy:.6f}"
        summary["model"] = str(base / "model.spdn")
        return summary

    def extract(self, model_path: str, images_path: str, out: str) -> Summary:
        base = self._out(out)
        spec, weights = self._load_model(model_path)
        layer = self.run.eval.layer
        self._check_layers(spec, [layer])
        enc = self._encoder_for(spec, layer)
        paths = traverse_paths(images_path)
        traces = self._traces(spec, weights, paths, [layer])
        descriptors = [encode(t, layer, enc) for t in traces]
        target = base / "descriptors.spdd"
        save_descriptors(DescriptorSet(descriptors, list(range(len(paths))), paths), str(target))
        return {"count": len(descriptors), "dim": descriptors[0].dim, "layer": layer,
                "encoder": enc.summary(), "out": str(target)}

    def match(self, query_path: str, ref_path: str, out: str) -> Summary:
        base = self._out(out)
        queries, refs = load_descriptors(query_path), load_descriptors(ref_path)
        matrix = build_confusion(queries.descriptors, refs.descriptors, self.run.eval.metric, self.run.workers)
        save_confusion(matrix, str(base / "confusion.txt"))
        return {"queries": matrix.num_queries, "refs": matrix.num_refs, "metric": matrix.metric}

    def _ground_truth(self, gt_path: Optional[str], num_queries: int) -> GroundTruth:
        if gt_path is None:
            return GroundTruth.identity(num_queries, self.run.eval.tolerance)
        gt = load_ground_truth(gt_path)
        if len(gt.matches) < num_queries:
            gt = GroundTruth(gt.matches + [None] * (num_queries - len(gt.matches)), gt.tolerance_frames)
        if self.config.is_set("eval.tolerance"):
            gt = gt.with_tolerance(self.run.eval.tolerance)
        return gt

    def eval(self, confusion_path: str, gt_path: Optional[str], out: str) -> Summary:
        base = self._out(out)
        matrix = load_confusion(confusion_path)
        curve = evaluate_pr(matrix, self._ground_truth(gt_path, matrix.num_queries))
        save_pr(curve, str(base / "pr.txt"))
        save_best_matches(curve, str(base / "best_matches.txt"))
        line_plot({"PR": curve.points}, str(base / "pr_curve.svg"), f"Precision-recall (AUC {curve.auc:.3f})",
                  "recall", "precision")
        return {"auc": f"{curve.auc:.6f}", "queries": matrix.num_queries, "thresholds": len(curve.thresholds)}

    def _auc_for(self, refs: List[Descriptor], queries: List[Descriptor], gt: GroundTruth) -> float:
        matrix = build_confusion(queries, refs, self.run.eval.metric, self.run.workers)
        return evaluate_pr(matrix, gt).auc

    def compare_encoders(self, model_path: str, ref_path: str, query_path: str, gt_path: Optional[str], out: str) -> Summary:
        base = self._out(out)
        spec, weights = self._load_model(model_path)
        layer = self.run.eval.layer
        self._check_layers(spec, [layer])
        ref_traces = self._traces(spec, weights, traverse_paths(ref_path), [layer])
        query_traces = self._traces(spec, weights, traverse_paths(query_path), [layer])
        gt = self._ground_truth(gt_path, len(query_traces))
        results: Dict[str, float] = {}
        for kind in ENCODER_KINDS:
            enc = EncoderConfig(kind, self.run.encoder.scales, self.run.encoder.normalize)
            results[kind] = self._auc_for(
                [encode(t, layer, enc) for t in ref_traces], [encode(t, layer, enc) for t in query_traces], gt
            )
        self._write_auc_table(results, base / "encoder_auc.txt", "encoder")
        bar_plot(results, str(base / "encoder_auc.svg"), f"Encoder comparison on {layer}")
        return {f"auc_{kind}": f"{auc:.6f}" for kind, auc in results.items()}

    def layer_sweep(self, model_path: str, ref_path: str, query_path: str, gt_path: Optional[str], out: str) -> Summary:
        base = self._out(out)
        spec, weights = self._load_model(model_path)
        layers = list(self.run.eval.layers) or feature_layers(spec)
        self._check_layers(spec, layers)
        ref_traces = self._traces(spec, weights, traverse_paths(ref_path), layers)
        query_traces = self._traces(spec, weights, traverse_paths(query_path), layers)
        gt = self._ground_truth(gt_path, len(query_traces))
        results: Dict[str, float] = {}
        for layer in layers:
            enc = self._encoder_for(spec, layer)
            results[layer] = self._auc_for(
                [encode(t, layer, enc) for t in ref_traces], [encode(t, layer, enc) for t in query_traces], gt
            )
        self._write_auc_table(results, base / "layer_auc.txt", "layer")
        bar_plot(results, str(base / "layer_auc.svg"), f"Per-layer AUC ({self.run.encoder.summary()})")
        best = max(results, key=lambda name: (results[name], -layers.index(name)))
        return {"layers": len(layers), "best_layer": best, "best_auc": f"{results[best]:.6f}"}

    @staticmethod
    def _write_auc_table(results: Dict[str, float], path: Path, label: str):
        lines = [f"# {label} auc"] + [f"{name} {auc:.9g}" for name, auc in results.items()]
        path.write_text("\n".join(lines) + "\n")

    def viz(self, model_path: str, images_path: str, out: str, filter_index: int = 0, k: int = 9,
            aggregate: str = "sum") -> Summary:
        base = self._out(out)
        spec, weights = self._load_model(model_path)
        layer = self.run.eval.layer
        self._check_layers(spec, [layer])
        aug = self._aug_for(spec)
        paths = traverse_paths(images_path)
        images = [load_image(p) for p in paths]

        first = spec.layers[0].name
        save_image(base / f"{first}_weights.png", weight_mosaic(weights, spec, first))
        hits = top_k_patches(spec, weights, images, layer, filter_index, k, aug, self.run.workers)
        write_patches(spec, layer, hits, images, paths, str(base), aug, prefix=f"{layer}_f{filter_index}")

        crop = display_crop(images[0], aug)
        _, trace = forward(spec, weights, preprocess(images[0], aug, "eval", mean=weights.mean), [layer])
        heat = heatmap(trace, layer, crop.shape[1:], aggregate)
        save_image(base / f"{layer}_heatmap.png", heat * 255.0)
        save_image(base / f"{layer}_overlay.png", overlay(crop, heat))
        return {"patches": len(hits), "layer": layer, "filter": filter_index, "out": str(base)}
