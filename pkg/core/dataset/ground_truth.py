"""
Ground-truth tables for AMOS-VPR

Plain text: optional ``tolerance=<n>`` and ``queries=<n>`` header lines, then
one ``query_index ref_index`` pair per line. Queries without a line have no
correct reference.
"""

from pathlib import Path
from typing import Dict

from core.errors import InputError
from core.placerec.evaluation import GroundTruth


def parse_ground_truth(text: str, source: str = "<text>") -> GroundTruth:
    tolerance = 0
    declared = None
    pairs: Dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in ("tolerance", "queries") or not value.strip().isdigit():
                raise InputError(f"{source}:{lineno}: malformed header {raw.strip()!r}")
            if key == "tolerance":
                tolerance = int(value)
            else:
                declared = int(value)
            continue
        parts = line.split()
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise InputError(f"{source}:{lineno}: expected 'query_index ref_index', got {raw.strip()!r}")
        query, ref = int(parts[0]), int(parts[1])
        if query in pairs:
            raise InputError(f"{source}:{lineno}: duplicate query index {query}")
        pairs[query] = ref
    count = max(pairs) + 1 if pairs else 0
    if declared is not None:
        if declared < count:
            raise InputError(f"{source}: queries={declared} but query index {count - 1} appears")
        count = declared
    return GroundTruth([pairs.get(q) for q in range(count)], tolerance)


def load_ground_truth(path: str) -> GroundTruth:
    """Parse a ground-truth table file"""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read ground truth {path}: {e}")
    return parse_ground_truth(text, path)


def save_ground_truth(gt: GroundTruth, path: str):
    lines = [f"tolerance={gt.tolerance_frames}", f"queries={gt.num_queries}"]
    lines += [f"{q} {r}" for q, r in enumerate(gt.matches) if r is not None]
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
