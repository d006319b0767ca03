"""
Ground truth, precision/recall sweep and AUC for AMOS-VPR

The sweep works on single best matches: every query contributes its nearest
reference and that distance. Each distinct best-match distance is a threshold;
queries at or under it are retrievals.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.errors import EvaluationError
from core.placerec.matching import ConfusionMatrix
from core.utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass
class GroundTruth:
    """Correct reference index per query (None when the query has none)"""
    matches: List[Optional[int]]
    tolerance_frames: int = 0

    @classmethod
    def identity(cls, n: int, tolerance_frames: int = 0) -> "GroundTruth":
        return cls(list(range(n)), tolerance_frames)

    @property
    def num_queries(self) -> int:
        return len(self.matches)

    def with_tolerance(self, tolerance_frames: int) -> "GroundTruth":
        return GroundTruth(list(self.matches), tolerance_frames)

    def is_correct(self, query: int, ref: int) -> bool:
        gt = self.matches[query]
        return gt is not None and abs(ref - gt) <= self.tolerance_frames

    def check(self, num_queries: int, num_refs: int):
        if self.num_queries != num_queries:
            raise EvaluationError(
                f"ground truth covers {self.num_queries} queries but the confusion matrix has {num_queries}"
            )
        for q, r in enumerate(self.matches):
            if r is not None and not 0 <= r < num_refs:
                raise EvaluationError(f"ground truth maps query {q} to reference {r}, only {num_refs} references")


@dataclass(frozen=True)
class BestMatch:
    query: int
    ref: int
    distance: float
    correct: bool


@dataclass
class PRCurve:
    """(recall, precision) points along the threshold sweep, plus its area"""
    points: List[Tuple[float, float]]
    thresholds: List[float]
    auc: float
    matches: List[BestMatch] = field(default_factory=list)


def auc(points: Sequence[Tuple[float, float]]) -> float:
    """Trapezoid area under (recall, precision) points sorted by recall.

    The curve starts at recall 0 with the first point's precision.
    """
    if len(points) == 0:
        raise EvaluationError("cannot integrate an empty precision/recall curve")
    area = 0.0
    prev_r, prev_p = 0.0, float(points[0][1])
    for r, p in points:
        r, p = float(r), float(p)
        area += (r - prev_r) * (p + prev_p) / 2.0
        prev_r, prev_p = r, p
    return min(1.0, max(0.0, area))


def best_matches(matrix: ConfusionMatrix, gt: GroundTruth) -> List[BestMatch]:
    refs = matrix.best_matches()
    dists = matrix.distances[np.arange(matrix.num_queries), refs]
    return [
        BestMatch(q, int(refs[q]), float(dists[q]), gt.is_correct(q, int(refs[q])))
        for q in range(matrix.num_queries)
    ]


def evaluate_pr(matrix: ConfusionMatrix, gt: GroundTruth) -> PRCurve:
    """Sweep the acceptance threshold over best-match distances"""
    gt.check(matrix.num_queries, matrix.num_refs)
    positives = sum(1 for r in gt.matches if r is not None)
    if positives == 0:
        raise EvaluationError("no query has a ground-truth reference")

    matches = best_matches(matrix, gt)
    order = sorted(range(len(matches)), key=lambda q: (matches[q].distance, q))
    points: List[Tuple[float, float]] = []
    thresholds: List[float] = []
    tp = fp = 0
    i = 0
    while i < len(order):
        threshold = matches[order[i]].distance
        # every query sharing this distance is admitted together
        while i < len(order) and matches[order[i]].distance == threshold:
            if matches[order[i]].correct:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((tp / positives, tp / (tp + fp)))
        thresholds.append(threshold)

    curve = PRCurve(points, thresholds, auc(points), matches)
    logger.info(
        f"PR sweep over {len(thresholds)} thresholds: auc={curve.auc:.6f}, "
        f"top-1 correct {sum(m.correct for m in matches)}/{positives}"
    )
    return curve


def save_pr(curve: PRCurve, path: str):
    """Two-column recall/precision table with a trailing auc comment"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# recall precision"]
    lines += [f"{r:.9g} {p:.9g}" for r, p in curve.points]
    lines.append(f"# auc = {curve.auc:.9g}")
    out.write_text("\n".join(lines) + "\n")


def save_best_matches(curve: PRCurve, path: str):
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# query ref distance correct"]
    lines += [f"{m.query} {m.ref} {m.distance:.9g} {int(m.correct)}" for m in curve.matches]
    out.write_text("\n".join(lines) + "\n")
