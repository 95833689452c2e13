from .metrics import (
    C_FA,
    C_MISS,
    P_TARGET,
    compute_eer,
    compute_min_dcf,
    det_points,
    detection_costs,
    error_rates,
)
from .report import EvaluationReport
from .trials import ScoreSet, evaluate_trials

__all__ = [
    "C_FA",
    "C_MISS",
    "P_TARGET",
    "EvaluationReport",
    "ScoreSet",
    "compute_eer",
    "compute_min_dcf",
    "det_points",
    "detection_costs",
    "error_rates",
    "evaluate_trials",
]
