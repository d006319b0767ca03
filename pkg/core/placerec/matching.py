"""
Descriptor distances and confusion matrices for AMOS-VPR
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from core.encoding.pooling import Descriptor
from core.errors import EvaluationError, InputError, ShapeError
from core.utils.logger import setup_logger

logger = setup_logger(__name__)

METRICS = ("cosine", "euclidean")

Vector = Union[Descriptor, np.ndarray]


def _values(v: Vector) -> np.ndarray:
    return np.asarray(v.values if isinstance(v, Descriptor) else v, dtype=np.float64)


def _row_distances(query: np.ndarray, refs: np.ndarray, metric: str) -> np.ndarray:
    """Distance from one query vector to every row of refs.

    Both distance() and build_confusion() go through here so a confusion entry
    equals the pairwise distance bit for bit.
    """
    if metric == "cosine":
        dots = np.sum(refs * query[None, :], axis=1)
        norms = np.sqrt(np.sum(refs * refs, axis=1)) * np.sqrt(np.sum(query * query))
        safe = np.where(norms > 0, norms, 1.0)
        dist = np.where(norms > 0, 1.0 - dots / safe, 1.0)
        return np.maximum(dist, 0.0)
    if metric == "euclidean":
        diff = refs - query[None, :]
        return np.sqrt(np.sum(diff * diff, axis=1))
    raise EvaluationError(f"unknown metric {metric!r}, expected one of {METRICS}")


def distance(a: Vector, b: Vector, metric: str = "cosine") -> float:
    """Cosine (1 - cos, 1 when a norm is zero) or euclidean distance"""
    va, vb = _values(a), _values(b)
    if va.shape != vb.shape:
        raise ShapeError.mismatch("descriptor", va.shape, vb.shape)
    return float(_row_distances(va, vb[None, :], metric)[0])


@dataclass
class ConfusionMatrix:
    """Query x reference distances; distances[q, r] is query q against reference r"""
    distances: np.ndarray
    metric: str = "cosine"

    @property
    def num_queries(self) -> int:
        return self.distances.shape[0]

    @property
    def num_refs(self) -> int:
        return self.distances.shape[1]

    def best_matches(self) -> np.ndarray:
        """argmin reference per query, smallest index on ties"""
        return np.argmin(self.distances, axis=1)


def _stack(feats: Sequence[Vector], what: str) -> np.ndarray:
    if len(feats) == 0:
        raise EvaluationError(f"{what} traverse is empty")
    rows = [_values(f) for f in feats]
    dim = rows[0].shape
    for i, row in enumerate(rows):
        if row.shape != dim:
            raise ShapeError(f"{what} descriptor {i} has shape {row.shape}, expected {dim}")
    return np.stack(rows)


def build_confusion(
    query_feats: Sequence[Vector], ref_feats: Sequence[Vector], metric: str = "cosine", workers: int = 1
) -> ConfusionMatrix:
    """Distance of every query to every reference"""
    queries = _stack(query_feats, "query")
    refs = _stack(ref_feats, "reference")
    if queries.shape[1] != refs.shape[1]:
        raise ShapeError.mismatch("query/reference descriptor", refs.shape[1:], queries.shape[1:])
    if metric not in METRICS:
        raise EvaluationError(f"unknown metric {metric!r}, expected one of {METRICS}")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda q: _row_distances(q, refs, metric), queries))
    matrix = ConfusionMatrix(np.stack(rows), metric)
    logger.info(f"Built {matrix.num_queries}x{matrix.num_refs} {metric} confusion matrix")
    return matrix


def save_confusion(matrix: ConfusionMatrix, path: str):
    """One query per line, space-separated distances"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = [" ".join(f"{d:.9g}" for d in row) for row in matrix.distances]
    out.write_text(f"# metric={matrix.metric}\n" + "\n".join(lines) + "\n")


def load_confusion(path: str) -> ConfusionMatrix:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read confusion matrix {path}: {e}")
    metric = "cosine"
    rows: List[List[float]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.startswith("# metric="):
            metric = line.split("=", 1)[1].strip()
            continue
        if not line.strip() or line.startswith("#"):
            continue
        try:
            rows.append([float(v) for v in line.split()])
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric distance")
        if len(rows[-1]) != len(rows[0]):
            raise InputError(f"{path}:{lineno}: expected {len(rows[0])} distances, got {len(rows[-1])}")
    if not rows:
        raise InputError(f"confusion matrix {path} is empty")
    distances = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(distances)) or np.any(distances < 0):
        raise InputError(f"confusion matrix {path} holds negative or non-finite distances")
    return ConfusionMatrix(distances, metric)
