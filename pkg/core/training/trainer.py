"""
Minibatch SGD training loop for AMOS-VPR
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.config import AugmentConfig, TrainConfig
from core.dataset.images import load_image, resize_bilinear
from core.dataset.places import PlaceDataset
from core.errors import InputError, TrainingDivergedError
from core.network.model import LayerParams, ModelWeights, init_weights, loss_and_grads, predict
from core.network.spec import NetworkSpec
from core.training.optimizer import lr_at, sgd_step
from core.training.preprocess import channel_mean, preprocess
from core.utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass
class LogRow:
    iteration: int
    lr: float
    loss: float
    val_accuracy: Optional[float] = None


@dataclass
class TrainLog:
    """Per-iteration loss and lr, plus one row per logging interval"""
    losses: List[float] = field(default_factory=list)
    lrs: List[float] = field(default_factory=list)
    epochs: List[int] = field(default_factory=list)
    rows: List[LogRow] = field(default_factory=list)

    def record(self, iteration: int, epoch: int, lr: float, loss: float):
        if iteration != len(self.losses):
            raise ValueError(f"train log expected iteration {len(self.losses)}, got {iteration}")
        self.losses.append(loss)
        self.lrs.append(lr)
        self.epochs.append(epoch)

    def epoch_mean_losses(self) -> List[float]:
        """Mean batch loss of every epoch that started during training"""
        sums: Dict[int, List[float]] = {}
        for epoch, loss in zip(self.epochs, self.losses):
            sums.setdefault(epoch, []).append(loss)
        return [float(np.mean(sums[e])) for e in sorted(sums)]

    def to_text(self) -> str:
        lines = ["# iteration lr loss val_accuracy"]
        for row in self.rows:
            acc = "nan" if row.val_accuracy is None else f"{row.val_accuracy:.6f}"
            lines.append(f"{row.iteration} {row.lr:.9g} {row.loss:.9g} {acc}")
        return "\n".join(lines) + "\n"

    def save(self, path: str):
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(self.to_text())


def load_images(paths: Sequence[str], size: int, workers: int = 1) -> List[np.ndarray]:
    """Decode and resize every image once, in input order"""
    def _load(path: str) -> np.ndarray:
        return resize_bilinear(load_image(path), size, size)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_load, paths))


def evaluate_accuracy(
    spec: NetworkSpec,
    weights: ModelWeights,
    images: Sequence[np.ndarray],
    labels: Sequence[int],
    aug_cfg: AugmentConfig,
    workers: int = 1,
) -> float:
    """Top-1 accuracy on eval-mode (center crop) inputs"""
    if len(images) == 0:
        return float("nan")

    def _predict(image: np.ndarray) -> int:
        return predict(spec, weights, preprocess(image, aug_cfg, "eval", mean=weights.mean))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        predictions = list(pool.map(_predict, images))
    return float(np.mean([p == y for p, y in zip(predictions, labels)]))


class BatchStream:
    """Seeded epoch permutations consumed batch by batch"""

    def __init__(self, n: int, rng: np.random.Generator):
        self.n = n
        self.rng = rng
        self.order = rng.permutation(n)
        self.pos = 0
        self.epoch = 0

    def next(self, batch_size: int) -> Tuple[List[int], int]:
        """Sample indices of the next batch and the epoch it started in"""
        epoch = self.epoch
        batch = []
        while len(batch) < batch_size:
            if self.pos == self.n:
                self.order = self.rng.permutation(self.n)
                self.pos = 0
                self.epoch += 1
                if batch:
                    continue
                epoch = self.epoch
            batch.append(int(self.order[self.pos]))
            self.pos += 1
        return batch, epoch


def _reduce(per_sample: List[Dict[str, LayerParams]]) -> Dict[str, LayerParams]:
    """Mean over samples, accumulated in sample order"""
    scale = np.float32(1.0 / len(per_sample))
    total = {name: LayerParams(g.weight.copy(), g.bias.copy()) for name, g in per_sample[0].items()}
    for grads in per_sample[1:]:
        for name, g in grads.items():
            acc = total[name]
            total[name] = LayerParams(acc.weight + g.weight, acc.bias + g.bias)
    return {name: LayerParams(g.weight * scale, g.bias * scale) for name, g in total.items()}


def train(
    dataset: PlaceDataset,
    spec: NetworkSpec,
    train_cfg: TrainConfig,
    aug_cfg: AugmentConfig,
    val: Optional[PlaceDataset] = None,
    workers: int = 1,
    weights: Optional[ModelWeights] = None,
) -> Tuple[ModelWeights, TrainLog]:
    """Train spec on dataset; the returned weights carry the training-set channel mean"""
    samples = dataset.samples()
    if not samples:
        raise InputError("training dataset is empty")
    bad = sorted({y for _, y in samples if not 0 <= y < spec.num_classes})
    if bad:
        raise InputError(f"labels {bad} fall outside [0, {spec.num_classes}) for network {spec.name}")

    paths = [p for p, _ in samples]
    labels = [y for _, y in samples]
    logger.info(f"Loading {len(paths)} training images")
    images = load_images(paths, aug_cfg.resize_to, workers)
    val_images, val_labels = [], []
    if val is not None and len(val):
        val_images = load_images([p for p, _ in val.samples()], aug_cfg.resize_to, workers)
        val_labels = [y for _, y in val.samples()]

    mean = channel_mean(images, aug_cfg)
    if weights is None:
        weights = init_weights(spec, train_cfg.seed, train_cfg.init_std)
    weights = ModelWeights(weights.params, mean)
    velocity = weights.zeros_like()

    rng = np.random.default_rng(train_cfg.seed)
    stream = BatchStream(len(images), rng)
    log = TrainLog()
    logger.info(
        f"Training {spec.name} ({weights.num_parameters()} parameters) on {len(images)} images, "
        f"{spec.num_classes} places, {train_cfg.max_iters} iterations"
    )

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for it in range(train_cfg.max_iters):
            batch, epoch = stream.next(train_cfg.batch_size)
            inputs = [preprocess(images[i], aug_cfg, "train", rng, mean) for i in batch]
            current = weights
            results = list(pool.map(
                lambda item: loss_and_grads(spec, current, item[0], item[1]),
                zip(inputs, [labels[i] for i in batch]),
            ))
            loss = float(np.mean([r[0] for r in results]))
            if not math.isfinite(loss):
                raise TrainingDivergedError(it, loss)
            lr = lr_at(it, train_cfg)
            log.record(it, epoch, lr, loss)
            weights, velocity = sgd_step(weights, _reduce([r[2] for r in results]), velocity, train_cfg, it)

            if (it + 1) % train_cfg.log_interval == 0 or it + 1 == train_cfg.max_iters:
                acc = evaluate_accuracy(spec, weights, val_images, val_labels, aug_cfg, workers) if val_images else None
                log.rows.append(LogRow(it, lr, loss, acc))
                acc_text = "n/a" if acc is None else f"{acc:.4f}"
                logger.info(f"iter {it} lr {lr:.6g} loss {loss:.6f} val_accuracy {acc_text}")

    return weights, log
