"""
Place recognition evaluation for AMOS-VPR
"""

from core.placerec.matching import (
    METRICS,
    ConfusionMatrix,
    distance,
    build_confusion,
    save_confusion,
    load_confusion,
)
from core.placerec.evaluation import (
    GroundTruth,
    BestMatch,
    PRCurve,
    auc,
    best_matches,
    evaluate_pr,
    save_pr,
    save_best_matches,
)
