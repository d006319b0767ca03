"""
Brute-force reference implementations for AMOS-VPR tests

Nothing here imports from ``core``: each routine re-derives its arithmetic
with plain loops so agreement with the optimized code means something.
"""

from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np


def oracle_conv(x: np.ndarray, weights: np.ndarray, biases: np.ndarray, stride: int = 1, pad: int = 0) -> np.ndarray:
    """Six nested loops over output map, rows, cols, input map and kernel taps"""
    c_in, h, w = x.shape
    c_out, c_in_k, k, _ = weights.shape
    if c_in != c_in_k:
        raise ValueError(f"input has {c_in} channels, kernels expect {c_in_k}")
    h_out = (h + 2 * pad - k) // stride + 1
    w_out = (w + 2 * pad - k) // stride + 1
    out = np.zeros((c_out, h_out, w_out), dtype=np.float64)
    for o in range(c_out):
        for r in range(h_out):
            for c in range(w_out):
                total = float(biases[o])
                for i in range(c_in):
                    for u in range(k):
                        for v in range(k):
                            y = r * stride + u - pad
                            z = c * stride + v - pad
                            if 0 <= y < h and 0 <= z < w:
                                total += float(weights[o, i, u, v]) * float(x[i, y, z])
                out[o, r, c] = total
    return out


def oracle_msp(maps: np.ndarray, scales: Sequence[int]) -> np.ndarray:
    """Pyramid max pooling by testing every pixel for membership in every cell.

    Row r belongs to cell i of scale S when i*H <= r*S < (i+1)*H, the same
    floor partition written as an inequality instead of a boundary table.
    """
    channels, h, w = maps.shape
    out = []
    for ch in range(channels):
        for s in scales:
            for i in range(s):
                for j in range(s):
                    best = None
                    for r in range(h):
                        if not (i * h <= r * s < (i + 1) * h):
                            continue
                        for c in range(w):
                            if not (j * w <= c * s < (j + 1) * w):
                                continue
                            v = float(maps[ch, r, c])
                            if best is None or v > best:
                                best = v
                    out.append(0.0 if best is None else best)
    return np.array(out, dtype=np.float64)


def oracle_pr(
    distances: np.ndarray, gt: Sequence[Optional[int]], tolerance: int = 0
) -> Tuple[List[Tuple[float, float]], float]:
    """Recount TP/FP from scratch at every distinct best-match distance"""
    q_count, r_count = distances.shape
    best_ref, best_dist = [], []
    for q in range(q_count):
        ref, dist = 0, float(distances[q, 0])
        for r in range(1, r_count):
            if float(distances[q, r]) < dist:
                ref, dist = r, float(distances[q, r])
        best_ref.append(ref)
        best_dist.append(dist)
    positives = sum(1 for g in gt if g is not None)
    points = []
    for t in sorted(set(best_dist)):
        tp = fp = 0
        for q in range(q_count):
            if best_dist[q] <= t:
                if gt[q] is not None and abs(best_ref[q] - gt[q]) <= tolerance:
                    tp += 1
                else:
                    fp += 1
        points.append((tp / positives, tp / (tp + fp)))
    area = 0.0
    prev = (0.0, points[0][1])
    for point in points:
        area += (point[0] - prev[0]) * (point[1] + prev[1]) / 2
        prev = point
    return points, area


def riemann_area(points: Sequence[Tuple[float, float]], steps: int = 1000) -> float:
    """Midpoint sums over each segment of the curve through points (implicit start at recall 0)"""
    xs = [0.0] + [p[0] for p in points]
    ys = [points[0][1]] + [p[1] for p in points]
    total = 0.0
    for x0, x1, y0, y1 in zip(xs, xs[1:], ys, ys[1:]):
        width = (x1 - x0) / steps
        for n in range(steps):
            t = (n + 0.5) / steps
            total += (y0 + t * (y1 - y0)) * width
    return total


def numeric_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-3) -> np.ndarray:
    """Central differences of a scalar function, one coordinate at a time"""
    grad = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + eps
        plus = f(x)
        flat[i] = saved - eps
        minus = f(x)
        flat[i] = saved
        grad.reshape(-1)[i] = (plus - minus) / (2 * eps)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
